//! Potential functions over layer labels, and audits of the inequalities
//! they satisfy.
//!
//! For a layer with rectangle set `R_t` and a grid point `x`,
//!
//! ```text
//! counter:  phi_t(x) = max_{[a,b] in R_t, x in [a,b]}  min(sum b, t) - sum x
//! parallel: phi_t(x) = max_{[a,b] in R_t, x in [a,b]}  sum b - sum x
//! ```
//!
//! and `Phi_t` sums `phi_t` over the grid. The counter grid is the simplex
//! `{x in N^(k-1) : sum x <= t}`; the parallel grid is the box `{0..g}^k`
//! with `g = floor(n/10)`. Uncovered points count as 0; for valid programs
//! every grid point is covered, since every frequency vector is reached.
//!
//! Tables are filled by painting each rectangle's grid points, so the cost
//! is the total rectangle volume rather than `|grid| * |R_t|`.

use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use crate::bounds::gen_binom;
use crate::budget::Budgets;
use crate::combin::CompositionIndex;
use crate::error::{Error, Result};
use crate::exact::{binomial, int, Surd};
use crate::labeling::{verify, LabelMode, LabelSweep, LabeledRobp, LayerLabels, Problem, RectLabel};
use crate::robp::{AlphabetKind, Robp};

/// `phi_t(x)` for the counter potential, evaluated directly.
pub fn phi_counter(rects: &[RectLabel], x: &[u32], t: u32) -> u32 {
    let sx: u32 = x.iter().sum();
    rects
        .iter()
        .filter(|r| r.contains(x))
        .map(|r| r.hi.iter().sum::<u32>().min(t) - sx)
        .max()
        .unwrap_or(0)
}

/// `phi_t(x)` for the parallel potential, evaluated directly.
pub fn phi_parallel(rects: &[RectLabel], x: &[u32]) -> u32 {
    let sx: u32 = x.iter().sum();
    rects
        .iter()
        .filter(|r| r.contains(x))
        .map(|r| r.hi.iter().sum::<u32>() - sx)
        .max()
        .unwrap_or(0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridKind {
    /// `{x in N^(k-1) : sum x <= t}`, growing with `t`.
    Simplex,
    /// `{0..side-1}^k`, fixed.
    Box { side: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PotentialProfile {
    pub grid: GridKind,
    /// Letters of the counting problem (`2` for binary); coordinates for parallel.
    pub k: usize,
    pub n: usize,
    pub width: usize,
    /// First audited layer; `phi[i]` belongs to layer `first_layer + i`.
    pub first_layer: usize,
    pub phi: Vec<BigUint>,
    /// Per-layer tables in grid rank order, when requested.
    pub tables: Option<Vec<Vec<u32>>>,
}

impl PotentialProfile {
    pub fn layers(&self) -> std::ops::RangeInclusive<usize> {
        self.first_layer..=self.n
    }

    pub fn total(&self, t: usize) -> &BigUint {
        &self.phi[t - self.first_layer]
    }

    fn dims(&self) -> usize {
        match self.grid {
            GridKind::Simplex => self.k - 1,
            GridKind::Box { .. } => self.k,
        }
    }

    /// `phi_t(x)` from the stored tables; `None` off the grid or without tables.
    pub fn phi_at(&self, t: usize, x: &[u32]) -> Option<u32> {
        let tables = self.tables.as_ref()?;
        if !self.layers().contains(&t) || x.len() != self.dims() {
            return None;
        }
        let table = &tables[t - self.first_layer];
        match self.grid {
            GridKind::Simplex => {
                if x.iter().sum::<u32>() as usize > t {
                    return None;
                }
                let index = CompositionIndex::new(self.k, t);
                Some(table[index.rank(x, t) as usize])
            }
            GridKind::Box { side } => {
                if x.iter().any(|&c| c >= side) {
                    return None;
                }
                Some(table[box_rank(x, side)])
            }
        }
    }
}

#[inline]
fn box_rank(x: &[u32], side: u32) -> usize {
    x.iter().fold(0usize, |r, &c| r * side as usize + c as usize)
}

/// Visits every `x` in `[lo, hi]` with `sum x <= cap` as runs along the
/// last coordinate: the run's first point, its coordinate sum and its length.
/// Both grid rankings step by one along the last coordinate.
#[inline]
fn for_each_run(lo: &[u32], hi: &[u32], cap: u32, mut visit: impl FnMut(&[u32], u32, usize)) {
    let last = lo.len() - 1;
    let mut x = lo.to_vec();
    let mut sum: u32 = lo.iter().sum();
    if sum > cap || lo.iter().zip(hi).any(|(a, b)| a > b) {
        return;
    }
    loop {
        visit(&x, sum, ((hi[last] - lo[last]).min(cap - sum) + 1) as usize);
        let mut j = last;
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            if x[j] < hi[j] && sum < cap {
                x[j] += 1;
                sum += 1;
                break;
            }
            sum -= x[j] - lo[j];
            x[j] = lo[j];
        }
    }
}

/// `cell = max(cell, top - i)` along a run; `top >= run.len() - 1`.
#[inline]
fn paint_run(run: &mut [u32], top: u32) {
    for (i, cell) in run.iter_mut().enumerate() {
        *cell = (*cell).max(top - i as u32);
    }
}

fn paint_simplex(layer: &LayerLabels, t: usize, index: &CompositionIndex) -> Vec<u32> {
    let t32 = t as u32;
    let mut table = vec![0u32; index.count(t) as usize];
    for (lo, hi) in layer.rects() {
        let top = hi.iter().sum::<u32>().min(t32);
        for_each_run(lo, hi, t32, |x, sx, len| {
            let start = index.rank(x, t) as usize;
            paint_run(&mut table[start..start + len], top - sx);
        });
    }
    table
}

fn paint_box(layer: &LayerLabels, side: u32) -> Vec<u32> {
    let k = layer.dims();
    let mut table = vec![0u32; (side as usize).pow(k as u32)];
    let mut clipped = vec![0u32; k];
    for (lo, hi) in layer.rects() {
        if lo.iter().any(|&a| a >= side) {
            continue;
        }
        for (c, &h) in clipped.iter_mut().zip(hi) {
            *c = h.min(side - 1);
        }
        let top: u32 = hi.iter().sum();
        for_each_run(lo, &clipped, u32::MAX, |x, sx, len| {
            let start = box_rank(x, side);
            paint_run(&mut table[start..start + len], top - sx);
        });
    }
    table
}

fn table_sum(table: &[u32]) -> BigUint {
    BigUint::from(table.iter().map(|&v| v as u64).sum::<u64>())
}

fn grid_check(needed: BigUint, max_grid: u64) -> Result<()> {
    if needed > BigUint::from(max_grid) {
        return Err(Error::Budget {
            what: "potential grid",
            needed: needed.to_string(),
            budget: max_grid,
        });
    }
    Ok(())
}

fn counter_k(p: &Robp) -> Result<usize> {
    match p.alphabet().kind() {
        AlphabetKind::Counter => Ok(p.alphabet().k()),
        AlphabetKind::Binary => Ok(2),
        AlphabetKind::Parallel => Err(Error::precondition(
            "counter potential needs a counter or binary alphabet",
        )),
    }
}

fn simplex_profile(
    p: &Robp,
    layers: impl Iterator<Item = LayerLabels>,
    keep_tables: bool,
    max_grid: u64,
) -> Result<PotentialProfile> {
    let k = counter_k(p)?;
    let n = p.n();
    grid_check(binomial((n + k - 1) as u64, (k - 1) as u64), max_grid)?;
    let index = CompositionIndex::new(k, n);
    let mut phi = Vec::with_capacity(n + 1);
    let mut tables = keep_tables.then(Vec::new);
    for (t, layer) in layers.enumerate() {
        let table = paint_simplex(&layer, t, &index);
        phi.push(table_sum(&table));
        if let Some(tables) = tables.as_mut() {
            tables.push(table);
        }
    }
    Ok(PotentialProfile {
        grid: GridKind::Simplex,
        k,
        n,
        width: p.width(),
        first_layer: 0,
        phi,
        tables,
    })
}

fn box_profile(
    p: &Robp,
    layers: impl Iterator<Item = LayerLabels>,
    keep_tables: bool,
    max_grid: u64,
) -> Result<PotentialProfile> {
    if p.alphabet().kind() != AlphabetKind::Parallel {
        return Err(Error::precondition("parallel potential needs a parallel alphabet"));
    }
    let k = p.alphabet().k();
    let n = p.n();
    let g = n / 10;
    let side = (g + 1) as u32;
    grid_check(BigUint::from(side).pow(k as u32), max_grid)?;
    let mut phi = Vec::with_capacity(n + 1 - g);
    let mut tables = keep_tables.then(Vec::new);
    for layer in layers.skip(g) {
        let table = paint_box(&layer, side);
        phi.push(table_sum(&table));
        if let Some(tables) = tables.as_mut() {
            tables.push(table);
        }
    }
    Ok(PotentialProfile {
        grid: GridKind::Box { side },
        k,
        n,
        width: p.width(),
        first_layer: g,
        phi,
        tables,
    })
}

/// Counter potential of every layer, with tables, from precomputed labels.
pub fn profile_counter(lp: &LabeledRobp) -> Result<PotentialProfile> {
    if !matches!(lp.mode, LabelMode::CounterPotential | LabelMode::Binary) {
        return Err(Error::precondition("counter potential reads k-1 dimensional labels"));
    }
    simplex_profile(lp.program, lp.layers.iter().cloned(), true, Budgets::default().max_grid)
}

/// `Phi_t` for every layer, streaming labels one layer at a time.
pub fn counter_potentials(p: &Robp, max_grid: u64) -> Result<PotentialProfile> {
    let sweep = LabelSweep::new(p, LabelMode::potential_for(p.alphabet()))?;
    simplex_profile(p, sweep, false, max_grid)
}

/// Parallel potential of layers `floor(n/10)..=n`, with tables.
pub fn profile_parallel(lp: &LabeledRobp) -> Result<PotentialProfile> {
    if lp.mode != LabelMode::Parallel {
        return Err(Error::precondition("parallel potential reads parallel labels"));
    }
    box_profile(lp.program, lp.layers.iter().cloned(), true, Budgets::default().max_grid)
}

pub fn parallel_potentials(p: &Robp, max_grid: u64) -> Result<PotentialProfile> {
    let sweep = LabelSweep::new(p, LabelMode::Parallel)?;
    box_profile(p, sweep, false, max_grid)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditRow {
    pub t: usize,
    pub lhs: Surd,
    pub rhs: Surd,
    /// Margin in the direction the row requires; nonnegative iff it passes.
    pub slack: Surd,
    pub pass: bool,
}

impl AuditRow {
    fn at_least(t: usize, lhs: Surd, rhs: Surd) -> Self {
        let slack = &lhs - &rhs;
        AuditRow {
            t,
            pass: !slack.is_negative(),
            lhs,
            rhs,
            slack,
        }
    }

    fn at_most(t: usize, lhs: Surd, rhs: Surd) -> Self {
        let slack = &rhs - &lhs;
        AuditRow {
            t,
            pass: !slack.is_negative(),
            lhs,
            rhs,
            slack,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditReport {
    pub rows: Vec<AuditRow>,
    pub pass: bool,
}

impl AuditReport {
    fn from_rows(rows: Vec<AuditRow>) -> Self {
        AuditReport {
            pass: rows.iter().all(|r| r.pass),
            rows,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    /// `t,lhs,rhs,slack,pass` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,lhs,rhs,slack,pass\n");
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{}", r.t, r.lhs, r.rhs, r.slack, r.pass).unwrap();
        }
        out
    }
}

fn big(x: &BigUint) -> Surd {
    Surd::from(int(BigInt::from(x.clone())))
}

fn delta_growth(profile: &PotentialProfile, t: usize) -> Surd {
    let next = BigInt::from(profile.total(t + 1).clone());
    let here = BigInt::from(profile.total(t).clone());
    Surd::from(int(next - here))
}

/// `Phi_{t+1} - Phi_t >= max{0, C(t+k-1, k-1) - w}` for every `t < n`.
pub fn audit_growth_counter(profile: &PotentialProfile) -> Result<AuditReport> {
    if profile.grid != GridKind::Simplex {
        return Err(Error::precondition("counter audit needs a simplex profile"));
    }
    let k = profile.k as u64;
    let w = BigInt::from(profile.width);
    let rows = (0..profile.n)
        .map(|t| {
            let layer = BigInt::from(binomial(t as u64 + k - 1, k - 1));
            let rhs = (layer - &w).max(BigInt::zero());
            AuditRow::at_least(t, delta_growth(profile, t), Surd::from(int(rhs)))
        })
        .collect();
    Ok(AuditReport::from_rows(rows))
}

/// `Phi_n <= C(n+k-1, k) - C(n - 2(k-1)delta + k - 1, k)` for a program that
/// verifies at `delta <= n/(2(k-1))`.
pub fn audit_final_counter(
    p: &Robp,
    profile: &PotentialProfile,
    delta: impl Into<Surd>,
) -> Result<AuditReport> {
    let delta = delta.into();
    if profile.grid != GridKind::Simplex {
        return Err(Error::precondition("counter audit needs a simplex profile"));
    }
    let (n, k) = (profile.n, profile.k);
    let spread = delta.scale(&int(2 * (k as i64 - 1)));
    if spread > Surd::from(n as i64) {
        return Err(Error::precondition(format!(
            "final audit needs delta <= n/(2(k-1)), got {delta}"
        )));
    }
    if !verify(p, Problem::for_alphabet(p.alphabet()), delta.clone())?.valid {
        return Err(Error::precondition(format!("program does not verify at delta = {delta}")));
    }
    let all = big(&binomial((n + k - 1) as u64, k as u64));
    let arg = &Surd::from((n + k - 1) as i64) - &spread;
    let rhs = &all - &gen_binom(arg, k);
    Ok(AuditReport::from_rows(vec![AuditRow::at_most(n, big(profile.total(n)), rhs)]))
}

/// `Phi_{t+1} - Phi_t >= c((g+1)^k - w 2^k (g+1)^(c-1))` with
/// `c = ceil(9k/10)`, for `g <= t < n`; vacuous rows require only
/// `Phi_{t+1} >= Phi_t`.
pub fn audit_growth_parallel(profile: &PotentialProfile) -> Result<AuditReport> {
    let GridKind::Box { side } = profile.grid else {
        return Err(Error::precondition("parallel audit needs a box profile"));
    };
    let k = profile.k as u32;
    let c = (9 * k).div_ceil(10);
    let side = BigInt::from(side);
    let bound = BigInt::from(c)
        * (side.pow(k)
            - BigInt::from(profile.width) * (BigInt::one() << k) * side.pow(c - 1));
    let rhs = Surd::from(int(bound.max(BigInt::zero())));
    let rows = (profile.first_layer..profile.n)
        .map(|t| AuditRow::at_least(t, delta_growth(profile, t), rhs.clone()))
        .collect();
    Ok(AuditReport::from_rows(rows))
}

/// `Phi_n <= (g+1)^k * 2kn/3` for a program that verifies at `n/3`.
pub fn audit_final_parallel(p: &Robp, profile: &PotentialProfile) -> Result<AuditReport> {
    let GridKind::Box { side } = profile.grid else {
        return Err(Error::precondition("parallel audit needs a box profile"));
    };
    let (n, k) = (profile.n, profile.k);
    let third = Surd::from(crate::exact::rational(n as i64, 3));
    if !verify(p, Problem::Parallel(k), third)?.valid {
        return Err(Error::precondition("program does not verify at delta = n/3"));
    }
    let rhs = int(BigInt::from(side).pow(k as u32)) * crate::exact::rational(2 * (k * n) as i64, 3);
    Ok(AuditReport::from_rows(vec![AuditRow::at_most(
        n,
        big(profile.total(n)),
        Surd::from(rhs),
    )]))
}

/// `Phi_g >= 0`, the base case of the parallel argument.
pub fn audit_base_parallel(profile: &PotentialProfile) -> AuditReport {
    let t = profile.first_layer;
    AuditReport::from_rows(vec![AuditRow::at_least(t, big(profile.total(t)), Surd::from(0))])
}
