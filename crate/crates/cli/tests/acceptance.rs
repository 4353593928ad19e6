//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Runs with `cargo test -p robp-cli --test acceptance`.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use robp::bounds::{lb_small_w, thm_main_feasible, Verdict};
use robp::constructions::{
    exact_counter, exact_parallel_counter, rounded_counter, tribes, tribes_delta, RoundingPlan,
};
use robp::exact::{binomial, int, rational};
use robp::labeling::{minimal_error, verify, Problem};
use robp::oracle::{exhaustive_verify, frontier, frontier_brute_force, random_robp};
use robp::potential::{
    audit_base_parallel, audit_final_counter, audit_final_parallel, audit_growth_counter,
    audit_growth_parallel, counter_potentials, parallel_potentials,
};
use robp::robp::{validate, Alphabet, AlphabetKind, Robp};
use robp::streaming::MgSummary;
use robp::{Budgets, Surd};

/// Wall-clock limits per criterion. Criteria without a limit get `None`.
const LIMIT_BOUNDS: Duration = Duration::from_secs(1);
const LIMIT_TRIBES: Duration = Duration::from_secs(10);
const LIMIT_ROUNDED: Duration = Duration::from_secs(30);
const LIMIT_FRONTIER: Duration = Duration::from_secs(300);
const LIMIT_AUDITS: Duration = Duration::from_secs(120);
const LIMIT_VERIFIER: Duration = Duration::from_secs(120);
const LIMIT_PARALLEL: Duration = Duration::from_secs(120);
const LIMIT_STREAMING: Duration = Duration::from_secs(60);

const TRIBES_N: usize = 1000;
const TRIBES_WIDTHS: [usize; 3] = [3, 10, 100];
const ROUNDED_CASES: [(usize, usize, i64); 3] = [(100, 2, 10), (100, 3, 10), (200, 4, 10)];

const RANDOM_AUDIT_PROGRAMS: u64 = 1000;
const VERIFIER_PAIRS: u64 = 500;
const PARALLEL_PROGRAMS: u64 = 200;
const STREAMS: u64 = 1000;
const STREAM_LEN: usize = 10_000;
const STREAM_UNIVERSE: usize = 50;
const STREAM_KS: [usize; 3] = [2, 5, 10];
const EXHAUSTIVE_INPUTS: u64 = 1 << 20;

/// A program verified at some error, fed to the bound consistency check.
#[derive(Clone, Debug)]
struct Verified {
    origin: String,
    n: usize,
    k: usize,
    w: u64,
    delta: Surd,
}

#[derive(Default)]
struct Ledger {
    verified: Vec<Verified>,
}

impl Ledger {
    fn record(&mut self, origin: impl Into<String>, p: &Robp, delta: impl Into<Surd>) {
        let k = match p.alphabet().kind() {
            AlphabetKind::Parallel => return,
            AlphabetKind::Binary => 2,
            AlphabetKind::Counter => p.alphabet().k(),
        };
        self.verified.push(Verified {
            origin: origin.into(),
            n: p.n(),
            k,
            w: p.width() as u64,
            delta: delta.into(),
        });
    }
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>, ctx: impl FnOnce() -> String) -> Result<T, String> {
    r.map_err(|e| format!("{}: {e}", ctx()))
}

fn run_bounds_cli(w: u64) -> Result<(i32, serde_json::Value), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_robp"))
        .args(["bounds", "--n", "90", "--k", "2", "--w", &w.to_string(), "--delta", "30"])
        .output()
        .map_err(|e| format!("cannot run robp: {e}"))?;
    let json = serde_json::from_slice(&out.stdout)
        .map_err(|e| format!("bad JSON from robp bounds: {e}"))?;
    Ok((out.status.code().unwrap_or(-1), json))
}

fn criterion_1(_: &mut Ledger) -> Check {
    let (code, j) = run_bounds_cli(4)?;
    ensure(code == 1, || format!("w=4: exit status {code}, want 1"))?;
    ensure(j["m"] == 3, || format!("w=4: m = {}", j["m"]))?;
    ensure(j["lhs"] == "354", || format!("w=4: lhs = {}", j["lhs"]))?;
    ensure(j["rhs"] == "465", || format!("w=4: rhs = {}", j["rhs"]))?;
    ensure(j["verdict"] == "ruled_out", || format!("w=4: verdict {}", j["verdict"]))?;
    let (code, j) = run_bounds_cli(6)?;
    ensure(code == 0, || format!("w=6: exit status {code}, want 0"))?;
    ensure(j["verdict"] == "consistent", || format!("w=6: verdict {}", j["verdict"]))?;
    Ok("w=4: m=3 lhs=354 rhs=465 ruled_out; w=6: consistent".into())
}

fn criterion_2(ledger: &mut Ledger) -> Check {
    for w in TRIBES_WIDTHS {
        let p = ok(tribes(TRIBES_N, w), || format!("tribes({TRIBES_N}, {w})"))?;
        let report = validate(&p);
        ensure(report.valid, || format!("w={w}: invalid: {:?}", report.violations))?;
        ensure(p.width() <= w, || format!("w={w}: width {}", p.width()))?;
        let delta = tribes_delta(TRIBES_N, w);
        let cert = ok(verify(&p, Problem::Binary, delta.clone()), || format!("verify w={w}"))?;
        ensure(cert.valid, || format!("w={w}: error {} exceeds {delta}", cert.max_halfwidth))?;
        ledger.record(format!("tribes w={w}"), &p, delta);
    }
    Ok(format!("n={TRIBES_N}, w in {TRIBES_WIDTHS:?}: valid, narrow, verified"))
}

fn criterion_3(ledger: &mut Ledger) -> Check {
    let mut widths = Vec::new();
    for (n, k, d) in ROUNDED_CASES {
        let delta = int(d);
        let bound = ok(RoundingPlan::new(n, k, &delta), || format!("plan ({n},{k},{d})"))?.width_bound();
        let p = ok(rounded_counter(n, k, &delta), || format!("rounded_counter({n},{k},{d})"))?;
        ensure(validate(&p).valid, || format!("({n},{k},{d}): invalid"))?;
        let cert = ok(verify(&p, Problem::Counter(k), delta.clone()), || format!("verify ({n},{k},{d})"))?;
        ensure(cert.valid, || format!("({n},{k},{d}): error {} exceeds {d}", cert.max_halfwidth))?;
        ensure(BigUint::from(p.width()) <= bound, || {
            format!("({n},{k},{d}): width {} exceeds {bound}", p.width())
        })?;
        widths.push(format!("({n},{k},{d}): {} <= {bound}", p.width()));
        ledger.record(format!("rounded ({n},{k},{d})"), &p, delta);
    }
    Ok(widths.join("; "))
}

fn criterion_4(_: &mut Ledger) -> Check {
    let budgets = Budgets::default();
    let f = ok(frontier(2, 2, &budgets), || "frontier(2,2)".into())?;
    ensure(f.delta_star == rational(1, 2), || format!("frontier(2,2) = {}", f.delta_star))?;
    for n in 1..=10 {
        let f = ok(frontier(n, 1, &budgets), || format!("frontier({n},1)"))?;
        ensure(f.delta_star == rational(n as i64, 2), || format!("frontier({n},1) = {}", f.delta_star))?;
    }
    let mut cells = 0;
    for n in 1..=6 {
        for w in 1..=3 {
            let fast = ok(frontier(n, w, &budgets), || format!("frontier({n},{w})"))?.delta_star;
            let slow = ok(frontier_brute_force(n, w), || format!("brute force ({n},{w})"))?;
            ensure(fast == slow, || format!("({n},{w}): interval systems {fast}, programs {slow}"))?;
            cells += 1;
        }
    }
    Ok(format!("exact values hold; {cells} cells agree with brute force"))
}

/// Growth audit always; final audit when the program verifies at an error
/// the final inequality admits. Returns whether the final audit applied.
fn audit_counter_program(p: &Robp, delta: &Surd, what: &str) -> Result<bool, String> {
    let budgets = Budgets::default();
    let profile = ok(counter_potentials(p, budgets.max_grid), || format!("{what}: potentials"))?;
    let growth = ok(audit_growth_counter(&profile), || format!("{what}: growth"))?;
    if let Some(row) = growth.failures().next() {
        return Err(format!("{what}: growth fails at t={} ({} < {})", row.t, row.lhs, row.rhs));
    }
    let k = profile.k as i64;
    if delta.scale(&int(2 * (k - 1))) > Surd::from(p.n() as i64) {
        return Ok(false);
    }
    let fin = ok(audit_final_counter(p, &profile, delta.clone()), || format!("{what}: final"))?;
    if let Some(row) = fin.failures().next() {
        return Err(format!("{what}: final fails ({} > {})", row.lhs, row.rhs));
    }
    Ok(true)
}

fn criterion_5(ledger: &mut Ledger) -> Check {
    let mut finals = 0;
    for w in TRIBES_WIDTHS {
        let p = ok(tribes(TRIBES_N, w), || format!("tribes w={w}"))?;
        finals += audit_counter_program(&p, &tribes_delta(TRIBES_N, w), &format!("tribes w={w}"))? as usize;
    }
    for (n, k, d) in ROUNDED_CASES {
        let p = ok(rounded_counter(n, k, &int(d)), || format!("rounded ({n},{k},{d})"))?;
        finals += audit_counter_program(&p, &Surd::from(d), &format!("rounded ({n},{k},{d})"))? as usize;
    }
    let mut random_finals = 0;
    for seed in 0..RANDOM_AUDIT_PROGRAMS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=12);
        let w = rng.gen_range(1..=6);
        let alphabet = match rng.gen_range(0..3) {
            0 => Alphabet::binary(),
            1 => Alphabet::counter(2).unwrap(),
            _ => Alphabet::counter(3).unwrap(),
        };
        let p = random_robp(n, alphabet, w, seed);
        let best = ok(minimal_error(&p, Problem::for_alphabet(alphabet)), || format!("seed {seed}"))?.delta_star;
        let what = format!("random seed {seed} (n={n}, w={w}, {alphabet})");
        if audit_counter_program(&p, &Surd::from(best.clone()), &what)? {
            random_finals += 1;
            ledger.record(what, &p, best);
        }
    }
    Ok(format!(
        "6 constructions ({finals} final audits), {RANDOM_AUDIT_PROGRAMS} random programs ({random_finals} final audits)"
    ))
}

fn random_delta(rng: &mut ChaCha8Rng, best: &BigRational, n: usize) -> BigRational {
    let half = rational(1, 2);
    let d = match rng.gen_range(0..4) {
        0 => best.clone(),
        1 => best - &half,
        2 => best + &half,
        _ => rational(rng.gen_range(0..=4 * n as i64), 4),
    };
    if d.is_negative() {
        BigRational::zero()
    } else {
        d
    }
}

fn criterion_6(ledger: &mut Ledger) -> Check {
    let mut valid = 0;
    for seed in 0..VERIFIER_PAIRS {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + seed);
        let n = rng.gen_range(1..=8);
        let w = rng.gen_range(1..=5);
        let alphabet = match seed % 3 {
            0 => Alphabet::binary(),
            1 => Alphabet::counter(3).unwrap(),
            _ => Alphabet::parallel(2).unwrap(),
        };
        let problem = Problem::for_alphabet(alphabet);
        let mut p = random_robp(n, alphabet, w, seed);
        // Half the programs get arbitrary outputs instead of midpoints.
        if rng.gen_bool(0.5) {
            let tuples: Vec<Vec<BigRational>> = (0..p.layer_size(n))
                .map(|_| (0..alphabet.arity()).map(|_| rational(rng.gen_range(0..=2 * n as i64), 2)).collect())
                .collect();
            p = p.with_outputs(&tuples);
        }
        let best = ok(minimal_error(&p, problem), || format!("seed {seed}"))?.delta_star;
        let delta = random_delta(&mut rng, &best, n);
        let fast = ok(verify(&p, problem, delta.clone()), || format!("seed {seed}: verify"))?.valid;
        let slow = ok(exhaustive_verify(&p, problem, delta.clone(), EXHAUSTIVE_INPUTS), || {
            format!("seed {seed}: exhaustive")
        })?;
        ensure(fast == slow, || {
            format!("seed {seed} ({alphabet}, n={n}, delta={delta}): labels {fast}, exhaustive {slow}")
        })?;
        if fast {
            valid += 1;
            ledger.record(format!("verifier seed {seed}"), &p, delta);
        }
    }
    Ok(format!("{VERIFIER_PAIRS}/{VERIFIER_PAIRS} agree ({valid} valid)"))
}

fn criterion_7(ledger: &mut Ledger) -> Check {
    let mut checked = 0;
    let mut skipped = 0;
    for v in &ledger.verified {
        if v.delta.scale(&int(2 * (v.k as i64 - 1))) > Surd::from(v.n as i64) {
            // Outside the inequality's range; every width is trivially fine.
            skipped += 1;
            continue;
        }
        let report = ok(thm_main_feasible(v.n, v.k, v.w, v.delta.clone()), || v.origin.clone())?;
        ensure(report.verdict == Verdict::Consistent, || {
            format!("{} (n={}, k={}, w={}, delta={}) is ruled out", v.origin, v.n, v.k, v.w, v.delta)
        })?;
        checked += 1;
    }
    ensure(checked > 0, || "no verified programs were collected".into())?;
    let budgets = Budgets::default();
    let mut frontier_cells = 0;
    for n in 1..=10 {
        for w in 1..=3 {
            let point = ok(frontier(n, w, &budgets), || format!("frontier({n},{w})"))?;
            let witness = ok(robp::oracle::system_to_robp(&point.witness), || format!("witness ({n},{w})"))?;
            let cert = ok(verify(&witness, Problem::Binary, point.delta_star.clone()), || format!("witness ({n},{w})"))?;
            ensure(cert.valid && witness.width() <= w, || format!("frontier witness ({n},{w}) fails"))?;
            if point.delta_star.clone() * int(2) <= int(n as i64) {
                let report = ok(thm_main_feasible(n, 2, witness.width() as u64, point.delta_star.clone()), || {
                    format!("frontier ({n},{w})")
                })?;
                ensure(report.verdict == Verdict::Consistent, || format!("frontier ({n},{w}) ruled out"))?;
            }
            if w >= 3 {
                let lb = ok(lb_small_w(n, 2, w as u64), || format!("lb ({n},{w})"))?;
                ensure(lb <= point.delta_star, || format!("({n},{w}): bound {lb} > frontier {}", point.delta_star))?;
            }
            frontier_cells += 1;
        }
    }
    Ok(format!("{checked} verified programs consistent ({skipped} out of range); {frontier_cells} frontier cells"))
}

fn audit_parallel_program(p: &Robp, what: &str) -> Result<bool, String> {
    let profile = ok(parallel_potentials(p, Budgets::default().max_grid), || format!("{what}: potentials"))?;
    let base = audit_base_parallel(&profile);
    ensure(base.pass, || format!("{what}: negative base potential"))?;
    for t in profile.first_layer..profile.n {
        ensure(profile.total(t) <= profile.total(t + 1), || format!("{what}: potential drops at t={t}"))?;
    }
    let growth = ok(audit_growth_parallel(&profile), || format!("{what}: growth"))?;
    if let Some(row) = growth.failures().next() {
        return Err(format!("{what}: growth fails at t={}", row.t));
    }
    match audit_final_parallel(p, &profile) {
        Ok(report) => {
            ensure(report.pass, || format!("{what}: final audit fails"))?;
            Ok(true)
        }
        Err(robp::Error::Precondition(_)) => Ok(false),
        Err(e) => Err(format!("{what}: {e}")),
    }
}

fn criterion_8(_: &mut Ledger) -> Check {
    let alphabet = Alphabet::parallel(2).unwrap();
    let mut finals = 0;
    for seed in 0..PARALLEL_PROGRAMS {
        let mut rng = ChaCha8Rng::seed_from_u64(0xba11_0000 + seed);
        let n = rng.gen_range(20..=30);
        let w = rng.gen_range(1..=8);
        let p = random_robp(n, alphabet, w, seed);
        finals += audit_parallel_program(&p, &format!("seed {seed} (n={n}, w={w})"))? as usize;
    }
    let mut exact_finals = 0;
    for n in 20..=30 {
        let p = ok(exact_parallel_counter(n, 2), || format!("exact parallel n={n}"))?;
        exact_finals += audit_parallel_program(&p, &format!("exact parallel n={n}"))? as usize;
    }
    ensure(exact_finals == 11, || "final audit skipped on an exact parallel counter".into())?;
    Ok(format!(
        "{PARALLEL_PROGRAMS} random ({finals} final audits) and 11 exact parallel counters pass"
    ))
}

/// Both heavy-hitter clauses plus the `n/(2k)` query guarantee.
fn check_stream(stream: &[usize], k: usize, universe: usize, what: &str) -> Result<(), String> {
    let mut mg = ok(MgSummary::new(k, universe), || what.to_string())?;
    ok(mg.extend(stream.iter().copied()), || what.to_string())?;
    let out = ok(mg.finalize(), || what.to_string())?;
    let n = stream.len() as u64;
    let mut freq = vec![0u64; universe];
    for &e in stream {
        freq[e] += 1;
    }
    let mut seen = out.list.clone();
    seen.sort_unstable();
    seen.dedup();
    ensure(seen.len() == k && out.list.len() == k, || format!("{what}: list is not k distinct elements"))?;
    for (&u, &est) in out.list.iter().zip(&out.estimates) {
        let f = freq[u];
        ensure(est <= f && (f - est) * k as u64 <= n, || format!("{what}: element {u}: estimate {est}, frequency {f}"))?;
    }
    for (u, &f) in freq.iter().enumerate() {
        if f * k as u64 >= n {
            ensure(out.estimate_of(u).is_some(), || format!("{what}: heavy element {u} ({f}) missing"))?;
        }
        let approx = ok(out.to_approx_counts(u), || what.to_string())?;
        let err = (approx - int(f)).abs();
        ensure(err * int(2 * k as u64) <= int(n), || format!("{what}: query {u} is off by more than n/(2k)"))?;
    }
    Ok(())
}

fn criterion_9(_: &mut Ledger) -> Check {
    let zipf = WeightedIndex::new((1..=STREAM_UNIVERSE).map(|i| 1.0 / i as f64)).unwrap();
    for seed in 0..STREAMS {
        let mut rng = ChaCha8Rng::seed_from_u64(0x3173_0000 + seed);
        let k = STREAM_KS[seed as usize % STREAM_KS.len()];
        let stream: Vec<usize> = if seed % 2 == 0 {
            (0..STREAM_LEN).map(|_| rng.gen_range(0..STREAM_UNIVERSE)).collect()
        } else {
            (0..STREAM_LEN).map(|_| zipf.sample(&mut rng)).collect()
        };
        check_stream(&stream, k, STREAM_UNIVERSE, &format!("stream {seed} (k={k})"))?;
    }
    let mut families = 0;
    for k in STREAM_KS {
        let n = STREAM_LEN;
        check_stream(&vec![7; n], k, STREAM_UNIVERSE, &format!("all-equal k={k}"))?;
        let distinct: Vec<usize> = (0..n).collect();
        check_stream(&distinct, k, n, &format!("all-distinct k={k}"))?;
        let balanced: Vec<usize> = (0..n).map(|i| i % (k + 1)).collect();
        check_stream(&balanced, k, STREAM_UNIVERSE, &format!("k+1 balanced k={k}"))?;
        // One element at exactly ceil(n/k), spread last so counters churn first.
        let heavy = n.div_ceil(k);
        let mut edge: Vec<usize> = (0..n - heavy).map(|i| 1 + i % (STREAM_UNIVERSE - 1)).collect();
        edge.extend(std::iter::repeat(0).take(heavy));
        check_stream(&edge, k, STREAM_UNIVERSE, &format!("threshold element k={k}"))?;
        families += 4;
    }
    Ok(format!("{STREAMS} random streams and {families} adversarial streams"))
}

/// Lengths checked for each letter count.
fn exact_grid() -> Vec<(usize, usize)> {
    let mut grid = Vec::new();
    for k in 2..=3 {
        grid.extend((1..=200).map(|n| (n, k)));
    }
    grid.extend((1..=20).chain([50, 100, 150, 200]).map(|n| (n, 4)));
    grid
}

fn criterion_10(ledger: &mut Ledger) -> Check {
    let budgets = Budgets::default();
    let grid = exact_grid();
    let mut per_k = BTreeMap::new();
    for &(n, k) in &grid {
        let p = ok(exact_counter(n, k), || format!("exact_counter({n},{k})"))?;
        let want = binomial((n + k - 1) as u64, (k - 1) as u64);
        ensure(BigUint::from(p.width()) == want, || format!("({n},{k}): width {} != {want}", p.width()))?;
        let cert = ok(verify(&p, Problem::Counter(k), 0), || format!("({n},{k}) verify"))?;
        ensure(cert.valid, || format!("({n},{k}): fails at delta 0"))?;
        let profile = ok(counter_potentials(&p, budgets.max_grid), || format!("({n},{k}) potentials"))?;
        ensure(profile.phi.iter().all(Zero::is_zero), || format!("({n},{k}): nonzero potential"))?;
        let fin = ok(audit_final_counter(&p, &profile, 0), || format!("({n},{k}) final audit"))?;
        let row = &fin.rows[0];
        ensure(row.pass && row.slack == Surd::from(0), || format!("({n},{k}): final slack {}", row.slack))?;
        if n <= 40 || n % 50 == 0 {
            ledger.record(format!("exact ({n},{k})"), &p, 0);
        }
        *per_k.entry(k).or_insert(0) += 1;
    }
    Ok(format!("{} counters (per k: {per_k:?})", grid.len()))
}

type Criterion = fn(&mut Ledger) -> Check;

fn main() -> ExitCode {
    // Criterion 7 consumes programs verified by the others, so it runs last.
    let order: [(usize, Criterion, Option<Duration>); 10] = [
        (1, criterion_1, Some(LIMIT_BOUNDS)),
        (2, criterion_2, Some(LIMIT_TRIBES)),
        (3, criterion_3, Some(LIMIT_ROUNDED)),
        (4, criterion_4, Some(LIMIT_FRONTIER)),
        (5, criterion_5, Some(LIMIT_AUDITS)),
        (6, criterion_6, Some(LIMIT_VERIFIER)),
        (8, criterion_8, Some(LIMIT_PARALLEL)),
        (9, criterion_9, Some(LIMIT_STREAMING)),
        (10, criterion_10, None),
        (7, criterion_7, None),
    ];
    let mut ledger = Ledger::default();
    let mut results = BTreeMap::new();
    for (id, run, limit) in order {
        eprintln!("running criterion {id}");
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(|| run(&mut ledger)))
            .unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(limit)) if elapsed > limit => {
                Err(format!("took {elapsed:.2?}, limit {limit:?}"))
            }
            (o, _) => o,
        };
        results.insert(id, (outcome, elapsed));
    }
    let mut failed = 0;
    for (id, (outcome, elapsed)) in &results {
        match outcome {
            Ok(detail) => println!("PASS criterion {id}: {detail} [{elapsed:.2?}]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {id}: {detail} [{elapsed:.2?}]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
