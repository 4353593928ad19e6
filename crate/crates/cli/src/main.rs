//! `robp`: build, check and audit read-once branching programs from the shell.
//!
//! Exit status: 0 on success, 1 when a check fails (invalid program, failed
//! verification or audit, ruled-out parameters, fuzz violation), 2 on usage
//! or input errors.

mod plot;

use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::Signed;
use serde_json::json;

use robp::bounds::{self, Verdict};
use robp::constructions::{self, TribesOutputs};
use robp::exact::{format_rational, parse_rational};
use robp::format::{read_robp_from, write_robp};
use robp::labeling::{compute_labels, minimal_error, verify, LabelMode, Problem};
use robp::oracle;
use robp::potential;
use robp::robp::{validate, Alphabet, AlphabetKind, Robp};
use robp::streaming::{read_stream, MgSummary};
use robp::{Budgets, Error, Surd};

#[derive(Parser, Debug)]
#[command(name = "robp", version, about = "Read-once branching programs for approximate counting")]
struct Cli {
    #[command(flatten)]
    budgets: BudgetArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct BudgetArgs {
    /// Largest layer a builder may produce.
    #[arg(long, global = true, env = "ROBP_MAX_WIDTH", value_parser = positive)]
    max_width: Option<u64>,
    /// Largest input count exhaustive evaluation may enumerate.
    #[arg(long, global = true, env = "ROBP_MAX_INPUTS", value_parser = positive)]
    max_inputs: Option<u64>,
    /// Largest potential grid an audit may allocate.
    #[arg(long, global = true, env = "ROBP_MAX_GRID", value_parser = positive)]
    max_grid: Option<u64>,
    #[arg(long, global = true, env = "ROBP_FRONTIER_MAX_N", value_parser = positive)]
    frontier_max_n: Option<u64>,
    #[arg(long, global = true, env = "ROBP_FRONTIER_MAX_W", value_parser = positive)]
    frontier_max_w: Option<u64>,
}

impl BudgetArgs {
    fn resolve(&self) -> Budgets {
        let d = Budgets::default();
        Budgets {
            max_width: self.max_width.unwrap_or(d.max_width),
            max_inputs: self.max_inputs.unwrap_or(d.max_inputs),
            max_grid: self.max_grid.unwrap_or(d.max_grid),
            frontier_max_n: self.frontier_max_n.map_or(d.frontier_max_n, |v| v as usize),
            frontier_max_w: self.frontier_max_w.map_or(d.frontier_max_w, |v| v as usize),
        }
    }
}

fn positive(s: &str) -> Result<u64, String> {
    match s.parse::<u64>() {
        Ok(0) => Err("must be positive".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn nonneg_rational(s: &str) -> Result<BigRational, String> {
    let q = parse_rational(s).map_err(|e| e.to_string())?;
    if q.is_negative() {
        return Err("must be nonnegative".into());
    }
    Ok(q)
}

/// A rational, or an exact expression `a+b*sqrt(r)`.
fn nonneg_real(s: &str) -> Result<Surd, String> {
    let x = Surd::from_str(s).map_err(|e| e.to_string())?;
    if x.is_negative() {
        return Err("must be nonnegative".into());
    }
    Ok(x)
}

#[derive(Args, Debug)]
struct Io {
    /// Program file; standard input when absent.
    #[arg(short, long)]
    input: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Kind {
    Exact,
    Tribes,
    Rounded,
    Constant,
    Random,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum AlphabetArg {
    Binary,
    Counter,
    Parallel,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum OutputsArg {
    Fixed,
    Optimal,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModeArg {
    Full,
    Potential,
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq, Eq)]
enum AuditKind {
    Growth,
    Final,
    All,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Formula {
    /// Width/error feasibility inequality.
    Feasible,
    /// Error lower bound for a given width.
    SmallW,
    /// Width lower bound at error n/(3(k-1)).
    Standard,
    /// Width lower bound for k parallel counters.
    Parallel,
    /// Error envelope for binary counting at width w.
    TightnessW,
    /// Width envelope for k-letter counting at error delta.
    TightnessErr,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a program and write it as JSON.
    Build {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        w: Option<usize>,
        #[arg(long, value_parser = nonneg_rational)]
        delta: Option<BigRational>,
        /// Alphabet for constant and random programs.
        #[arg(long, value_enum, default_value = "binary")]
        alphabet: AlphabetArg,
        /// Output value of a constant program (every coordinate); n/2 when absent.
        #[arg(long, value_parser = nonneg_rational)]
        value: Option<BigRational>,
        /// Output assignment of the threshold counter.
        #[arg(long, value_enum, default_value = "fixed")]
        outputs: OutputsArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Destination file; standard output when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check structural rules; prints a JSON report.
    Validate(Io),
    /// Decide whether a program counts within delta; prints a JSON certificate.
    Verify {
        #[command(flatten)]
        io: Io,
        /// Allowed error: "p/q", or an exact form such as "49-sqrt(10)/2".
        #[arg(long, value_parser = nonneg_real)]
        delta: Surd,
        /// Also evaluate every input and report whether both agree.
        #[arg(long)]
        exhaustive: bool,
    },
    /// Dump per-vertex rectangle labels as CSV.
    Labels {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum, default_value = "full")]
        mode: ModeArg,
    },
    /// Audit the potential inequalities; prints CSV t,lhs,rhs,slack,pass.
    Audit {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum, default_value = "all")]
        kind: AuditKind,
        /// Error for the final counter audit; the program's minimal error when absent.
        #[arg(long, value_parser = nonneg_real)]
        delta: Option<Surd>,
    },
    /// Evaluate a bound; prints JSON.
    Bounds {
        #[arg(long, value_enum, default_value = "feasible")]
        formula: Formula,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long)]
        w: Option<u64>,
        #[arg(long, value_parser = nonneg_real)]
        delta: Option<Surd>,
    },
    /// Feasibility check over a range of widths (and lengths); prints CSV.
    Sweep {
        #[arg(long)]
        n: usize,
        /// Last length of the sweep; only `n` when absent.
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        w_min: u64,
        #[arg(long)]
        w_max: u64,
        #[arg(long, value_parser = nonneg_real)]
        delta: Surd,
    },
    /// Exact least error for binary counting; prints CSV.
    Frontier {
        #[arg(long, default_value_t = 1)]
        n_min: usize,
        #[arg(long)]
        n_max: usize,
        #[arg(long, default_value_t = 1)]
        w_min: usize,
        #[arg(long)]
        w_max: usize,
    },
    /// Check invariants on random programs; exits 1 on any violation.
    Fuzz {
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        w: usize,
        #[arg(long, value_enum, default_value = "binary")]
        alphabet: AlphabetArg,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        first_seed: u64,
    },
    /// Heavy hitters of a stream; prints JSON.
    Mg {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        k: usize,
        /// Universe size; elements are 0..U-1.
        #[arg(long = "universe", visible_alias = "U")]
        universe: usize,
    },
    /// Frequency estimate of one element from the heavy-hitter list; prints JSON.
    MgQuery {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        k: usize,
        #[arg(long = "universe", visible_alias = "U")]
        universe: usize,
        #[arg(long)]
        query: usize,
    },
    /// Envelope series for plotting; prints CSV series,x,y.
    PlotData {
        #[command(subcommand)]
        envelope: plot::Envelope,
    },
}

/// A failure carrying its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidProgram(_) => 1,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: 2,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type Outcome = Result<bool, Failure>;

fn read_program(io: &Io) -> Result<Robp, Failure> {
    let p = match &io.input {
        Some(path) => read_robp_from(BufReader::new(File::open(path)?))?,
        None => read_robp_from(io::stdin().lock())?,
    };
    Ok(p)
}

fn read_text(io: &Io) -> Result<Box<dyn io::BufRead>, Failure> {
    Ok(match &io.input {
        Some(path) => Box::new(BufReader::new(File::open(path)?)),
        None => {
            let mut buf = Vec::new();
            io::stdin().lock().read_to_end(&mut buf)?;
            Box::new(io::Cursor::new(buf))
        }
    })
}

fn emit(text: &str) -> io::Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()
}

fn emit_json(value: &serde_json::Value) -> io::Result<()> {
    emit(&format!("{value}\n"))
}

fn alphabet_of(arg: AlphabetArg, k: Option<usize>) -> Result<Alphabet, Failure> {
    Ok(match arg {
        AlphabetArg::Binary => Alphabet::binary(),
        AlphabetArg::Counter => Alphabet::counter(k.ok_or_else(|| usage("--k is required"))?)?,
        AlphabetArg::Parallel => Alphabet::parallel(k.ok_or_else(|| usage("--k is required"))?)?,
    })
}

fn need<T>(value: Option<T>, flag: &str) -> Result<T, Failure> {
    value.ok_or_else(|| usage(format!("--{flag} is required for this command")))
}

#[allow(clippy::too_many_arguments)]
fn build(
    kind: Kind,
    n: usize,
    k: Option<usize>,
    w: Option<usize>,
    delta: Option<BigRational>,
    alphabet: AlphabetArg,
    value: Option<BigRational>,
    outputs: OutputsArg,
    seed: u64,
    budgets: &Budgets,
) -> Result<Robp, Failure> {
    Ok(match kind {
        Kind::Exact => constructions::exact_counter_within(n, need(k, "k")?, budgets.max_width)?,
        Kind::Tribes => {
            let mode = match outputs {
                OutputsArg::Fixed => TribesOutputs::Fixed,
                OutputsArg::Optimal => TribesOutputs::Optimal,
            };
            constructions::tribes_with(n, need(w, "w")?, mode)?
        }
        Kind::Rounded => constructions::rounded_counter_within(
            n,
            need(k, "k")?,
            &need(delta, "delta")?,
            budgets.max_width,
        )?,
        Kind::Constant => {
            let alphabet = alphabet_of(alphabet, k)?;
            let v = value.unwrap_or_else(|| BigRational::new(n.into(), 2.into()));
            constructions::constant_program(n, alphabet, vec![v; alphabet.arity()])
        }
        Kind::Random => {
            let alphabet = alphabet_of(alphabet, k)?;
            oracle::random_robp(n, alphabet, need(w, "w")?, seed)
        }
    })
}

fn validation_json(p: &Robp) -> (bool, serde_json::Value) {
    let report = validate(p);
    let violations: Vec<_> = report
        .violations
        .iter()
        .map(|v| json!({"layer": v.layer, "vertex": v.vertex, "reason": v.kind.to_string()}))
        .collect();
    (
        report.valid,
        json!({
            "valid": report.valid,
            "width": report.width,
            "layer_sizes": report.layer_sizes,
            "violations": violations,
        }),
    )
}

fn audit(p: &Robp, kind: AuditKind, delta: Option<Surd>, budgets: &Budgets) -> Outcome {
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    match p.alphabet().kind() {
        AlphabetKind::Parallel => {
            let profile = potential::parallel_potentials(p, budgets.max_grid)?;
            if kind != AuditKind::Final {
                rows.extend(potential::audit_growth_parallel(&profile)?.rows);
            }
            if kind != AuditKind::Growth {
                match potential::audit_final_parallel(p, &profile) {
                    Ok(r) => rows.extend(r.rows),
                    Err(Error::Precondition(m)) if kind == AuditKind::All => notes.push(m),
                    Err(e) => return Err(e.into()),
                }
            }
        }
        _ => {
            let profile = potential::counter_potentials(p, budgets.max_grid)?;
            if kind != AuditKind::Final {
                rows.extend(potential::audit_growth_counter(&profile)?.rows);
            }
            if kind != AuditKind::Growth {
                // Default: the least error these outputs achieve.
                let delta = match delta {
                    Some(d) => d,
                    None => Surd::from(verify(p, Problem::for_alphabet(p.alphabet()), 0)?.max_halfwidth),
                };
                match potential::audit_final_counter(p, &profile, delta) {
                    Ok(r) => rows.extend(r.rows),
                    Err(Error::Precondition(m)) if kind == AuditKind::All => notes.push(m),
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }
    for note in notes {
        eprintln!("final audit skipped: {note}");
    }
    let pass = rows.iter().all(|r| r.pass);
    let report = potential::AuditReport { rows, pass };
    emit(&report.to_csv())?;
    Ok(pass)
}

fn rational_json(q: &BigRational) -> serde_json::Value {
    json!(format_rational(q))
}

fn bounds_cmd(formula: Formula, n: usize, k: usize, w: Option<u64>, delta: Option<Surd>) -> Outcome {
    match formula {
        Formula::Feasible => {
            let report = bounds::thm_main_feasible(n, k, need(w, "w")?, need(delta, "delta")?)?;
            emit_json(&report.to_json())?;
            Ok(report.verdict == Verdict::Consistent)
        }
        Formula::SmallW => {
            let w = need(w, "w")?;
            let value = bounds::lb_small_w(n, k, w)?;
            emit_json(&json!({"formula_id": "lb_small_w", "n": n, "k": k, "w": w, "value": rational_json(&value)}))?;
            Ok(true)
        }
        Formula::Standard => {
            let value = bounds::lb_standard(n, k)?;
            emit_json(&json!({"formula_id": "lb_standard", "n": n, "k": k, "value": rational_json(&value)}))?;
            Ok(true)
        }
        Formula::Parallel => {
            let value = bounds::kpar_lower_bound(n, k)?;
            emit_json(&json!({"formula_id": "kpar_lower_bound", "n": n, "k": k, "value": rational_json(&value)}))?;
            Ok(true)
        }
        Formula::TightnessW => {
            let t = bounds::tightness_small_width(n, need(w, "w")? as usize)?;
            emit(&t.to_text())?;
            Ok(t.is_ordered())
        }
        Formula::TightnessErr => {
            let delta = need(delta, "delta")?;
            let delta = delta
                .as_rational()
                .cloned()
                .ok_or_else(|| usage("--delta must be rational here"))?;
            let t = bounds::tightness_small_error(n, k, &delta)?;
            emit(&t.to_text())?;
            Ok(t.is_ordered())
        }
    }
}

fn frontier_cmd(n_min: usize, n_max: usize, w_min: usize, w_max: usize, budgets: &Budgets) -> Outcome {
    let mut out = String::from("n,w,delta_num,delta_den,lb_num,lb_den\n");
    for n in n_min.max(1)..=n_max {
        for w in w_min.max(1)..=w_max {
            let point = oracle::frontier(n, w, budgets)?;
            let lb = bounds::lb_small_w(n, 2, w as u64)?;
            let d = &point.delta_star;
            out.push_str(&format!(
                "{n},{w},{},{},{},{}\n",
                d.numer(),
                d.denom(),
                lb.numer(),
                lb.denom()
            ));
        }
    }
    emit(&out)?;
    Ok(true)
}

fn fuzz(seeds: u64, first_seed: u64, n: usize, w: usize, alphabet: Alphabet, budgets: &Budgets) -> Outcome {
    let problem = Problem::for_alphabet(alphabet);
    let mut violations = Vec::new();
    for seed in first_seed..first_seed + seeds {
        let p = oracle::random_robp(n, alphabet, w, seed);
        let mut fail = |what: String| violations.push(json!({"seed": seed, "violation": what}));
        if !validate(&p).valid {
            fail("generated program is invalid".into());
            continue;
        }
        if robp::format::read_robp(&write_robp(&p))? != p {
            fail("serialization round-trip changed the program".into());
        }
        let best = minimal_error(&p, problem)?.delta_star;
        for delta in [best.clone(), best.clone() - BigRational::new(1.into(), 2.into())] {
            if delta.is_negative() {
                continue;
            }
            let fast = verify(&p, problem, delta.clone())?.valid;
            match oracle::exhaustive_verify(&p, problem, delta.clone(), budgets.max_inputs) {
                Ok(slow) if slow != fast => fail(format!(
                    "verify says {fast}, exhaustive evaluation says {slow} at delta {}",
                    format_rational(&delta)
                )),
                Ok(_) | Err(Error::Budget { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
        let growth = match alphabet.kind() {
            AlphabetKind::Parallel if n >= 10 => {
                potential::audit_growth_parallel(&potential::parallel_potentials(&p, budgets.max_grid)?)?.pass
            }
            AlphabetKind::Parallel => true,
            _ => potential::audit_growth_counter(&potential::counter_potentials(&p, budgets.max_grid)?)?.pass,
        };
        if !growth {
            fail("growth audit failed".into());
        }
    }
    let ok = violations.is_empty();
    emit_json(&json!({
        "seeds": seeds,
        "first_seed": first_seed,
        "n": n,
        "w": w,
        "alphabet": alphabet.to_string(),
        "violations": violations,
    }))?;
    Ok(ok)
}

fn run(cli: Cli) -> Outcome {
    let budgets = cli.budgets.resolve();
    match cli.command {
        Command::Build {
            kind,
            n,
            k,
            w,
            delta,
            alphabet,
            value,
            outputs,
            seed,
            output,
        } => {
            let p = build(kind, n, k, w, delta, alphabet, value, outputs, seed, &budgets)?;
            let text = write_robp(&p);
            match output {
                Some(path) => std::fs::write(path, text)?,
                None => emit(&text)?,
            }
            Ok(true)
        }
        Command::Validate(io) => {
            let (valid, report) = validation_json(&read_program(&io)?);
            emit_json(&report)?;
            Ok(valid)
        }
        Command::Verify {
            io,
            delta,
            exhaustive,
        } => {
            let p = read_program(&io)?;
            let problem = Problem::for_alphabet(p.alphabet());
            let cert = verify(&p, problem, delta.clone())?;
            let mut doc = cert.to_json();
            if exhaustive {
                let slow = oracle::exhaustive_verify(&p, problem, delta, budgets.max_inputs)?;
                doc["exhaustive"] = json!(slow);
                if slow != cert.valid {
                    emit_json(&doc)?;
                    return Ok(false);
                }
            }
            emit_json(&doc)?;
            Ok(cert.valid)
        }
        Command::Labels { io, mode } => {
            let p = read_program(&io)?;
            let mode = match mode {
                ModeArg::Full => LabelMode::full_for(p.alphabet()),
                ModeArg::Potential => LabelMode::potential_for(p.alphabet()),
            };
            emit(&compute_labels(&p, mode)?.to_csv())?;
            Ok(true)
        }
        Command::Audit { io, kind, delta } => audit(&read_program(&io)?, kind, delta, &budgets),
        Command::Bounds {
            formula,
            n,
            k,
            w,
            delta,
        } => bounds_cmd(formula, n, k, w, delta),
        Command::Sweep {
            n,
            n_max,
            k,
            w_min,
            w_max,
            delta,
        } => {
            let mut out = format!("{}\n", bounds::BoundReport::CSV_HEADER);
            for n in n..=n_max.unwrap_or(n) {
                for report in bounds::sweep(n, k, w_min..=w_max, &delta)? {
                    out.push_str(&report.csv_row());
                    out.push('\n');
                }
            }
            emit(&out)?;
            Ok(true)
        }
        Command::Frontier {
            n_min,
            n_max,
            w_min,
            w_max,
        } => frontier_cmd(n_min, n_max, w_min, w_max, &budgets),
        Command::Fuzz {
            seeds,
            n,
            w,
            alphabet,
            k,
            first_seed,
        } => {
            if w == 0 {
                return Err(usage("--w must be positive"));
            }
            fuzz(seeds, first_seed, n, w, alphabet_of(alphabet, Some(k))?, &budgets)
        }
        Command::Mg { io, k, universe } => {
            let stream = read_stream(read_text(&io)?)?;
            let mut summary = MgSummary::new(k, universe)?;
            summary.extend(stream)?;
            let out = summary.finalize()?;
            emit_json(&serde_json::to_value(&out).expect("plain data"))?;
            Ok(true)
        }
        Command::MgQuery {
            io,
            k,
            universe,
            query,
        } => {
            let stream = read_stream(read_text(&io)?)?;
            let mut summary = MgSummary::new(k, universe)?;
            summary.extend(stream)?;
            let out = summary.finalize()?;
            let estimate = out.to_approx_counts(query)?;
            emit_json(&json!({
                "query": query,
                "estimate": format_rational(&estimate),
                "n": out.n,
                "k": k,
                "max_error": format_rational(&BigRational::new(out.n.into(), (2 * k).into())),
            }))?;
            Ok(true)
        }
        Command::PlotData { envelope } => {
            emit(&plot::emit_plot_data(&plot::sweep(&envelope, &budgets)?)?)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
