//! Explicit programs: exact counting, the segmented threshold counter for
//! small width, and the rounding counter for small error.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::budget::Budgets;
use crate::combin::{advance, CompositionIndex};
use crate::error::{Error, Result};
use crate::exact::{binomial, ceil_sqrt, ceil_to_dyadic, floor_sqrt, int, Surd};
use crate::labeling::with_optimal_outputs;
use crate::robp::{build_layered, Alphabet, OutputsBuilder, Robp};

/// Bits of precision for the dyadic threshold-counter outputs.
const OFFSET_BITS: u32 = 40;

fn width_budget_check(needed: &BigUint, budget: u64) -> Result<()> {
    if *needed > BigUint::from(budget) {
        return Err(Error::Budget {
            what: "layer width",
            needed: needed.to_string(),
            budget,
        });
    }
    Ok(())
}

/// Edges from the compositions of `total` to those of `next_total`: vertex
/// `a` goes to `round(a + e_s)` on symbol `s`.
fn count_edges(
    index: &CompositionIndex,
    total: usize,
    next_total: usize,
    mut round: impl FnMut(&mut [u32]),
) -> Vec<u32> {
    let k = index.parts();
    let mut table = Vec::with_capacity(index.count(total) as usize * k);
    let mut a = vec![0u32; k];
    a[k - 1] = total as u32;
    let mut b = vec![0u32; k];
    loop {
        for s in 0..k {
            b.copy_from_slice(&a);
            b[s] += 1;
            round(&mut b);
            table.push(index.rank(&b, next_total) as u32);
        }
        if !advance(&mut a) {
            return table;
        }
    }
}

fn composition_outputs(
    index: &CompositionIndex,
    total: usize,
    mut value: impl FnMut(u32) -> BigRational,
) -> crate::robp::Outputs {
    let k = index.parts();
    let mut outputs = OutputsBuilder::new(k);
    let mut a = vec![0u32; k];
    a[k - 1] = total as u32;
    let mut tuple = Vec::with_capacity(k);
    loop {
        tuple.clear();
        tuple.extend(a.iter().map(|&x| value(x)));
        outputs.push(&tuple);
        if !advance(&mut a) {
            return outputs.finish();
        }
    }
}

/// Counts every letter exactly. Layer `t` holds the `C(t+k-1, k-1)` count
/// vectors summing to `t`, in lexicographic order.
pub fn exact_counter(n: usize, k: usize) -> Result<Robp> {
    exact_counter_within(n, k, Budgets::default().max_width)
}

pub fn exact_counter_within(n: usize, k: usize, max_width: u64) -> Result<Robp> {
    let alphabet = Alphabet::counter(k)?;
    width_budget_check(&binomial((n + k - 1) as u64, (k - 1) as u64), max_width)?;
    let index = CompositionIndex::new(k, n);
    let sizes = (0..=n).map(|t| index.count(t) as usize).collect();
    let edges = (0..n).map(|t| count_edges(&index, t, t + 1, |_| ())).collect();
    let outputs = composition_outputs(&index, n, int);
    Ok(Robp::from_parts(n, alphabet, sizes, edges, outputs))
}

/// Width-one program that ignores its input.
pub fn constant_program(n: usize, alphabet: Alphabet, output: Vec<BigRational>) -> Robp {
    let mut outputs = OutputsBuilder::new(output.len());
    outputs.push(&output);
    let edges = (0..n).map(|_| vec![0u32; alphabet.size()]).collect();
    Robp::from_parts(n, alphabet, vec![1; n + 1], edges, outputs.finish())
}

/// Exact per-coordinate counter over `{0,1}^k`; `(t+1)^k` vertices in layer
/// `t`. Reference program for parallel-alphabet tests.
pub fn exact_parallel_counter(n: usize, k: usize) -> Result<Robp> {
    let alphabet = Alphabet::parallel(k)?;
    let width = BigUint::from(n + 1).pow(k as u32);
    width_budget_check(&width, Budgets::default().max_width)?;
    build_layered(
        n,
        alphabet,
        vec![0u32; k],
        usize::MAX,
        |_, counts, symbol| {
            let mut next = counts.clone();
            for (j, c) in next.iter_mut().enumerate() {
                *c += alphabet.counts(symbol, j) as u32;
            }
            next
        },
        |counts| counts.iter().map(|&c| int(c)).collect(),
    )
}

/// Segment layout of the threshold counter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TribesPlan {
    pub n: usize,
    pub w: usize,
    /// Number of segments.
    pub l: usize,
    /// `0 = p_0 < p_1 < ... < p_l = n`.
    pub breakpoints: Vec<usize>,
    /// Ones a segment needs; the in-segment counter saturates here.
    pub threshold: usize,
}

impl TribesPlan {
    pub fn new(n: usize, w: usize) -> Result<Self> {
        if n == 0 || w < 3 || 10 * w > n {
            return Err(Error::precondition(format!(
                "threshold counter needs n >= 1 and 3 <= w <= n/10, got n = {n}, w = {w}"
            )));
        }
        let l = (floor_sqrt(&(int(n as u64) / int(w as u64))))
            .to_usize()
            .expect("segment count fits usize");
        let (short, extra) = (n / l, n % l);
        let mut breakpoints = vec![0];
        for j in 0..l {
            let len = if j < extra { short + 1 } else { short };
            breakpoints.push(breakpoints[j] + len);
        }
        Ok(TribesPlan {
            n,
            w,
            l,
            breakpoints,
            threshold: w - 2,
        })
    }

    pub fn segment_lengths(&self) -> Vec<usize> {
        self.breakpoints.windows(2).map(|p| p[1] - p[0]).collect()
    }
}

/// `sqrt(n w) / 20`, the guaranteed improvement over the trivial error `n/2`.
pub fn tribes_offset(n: usize, w: usize) -> Surd {
    Surd::sqrt_of((n * w) as u64).scale(&BigRational::new(1.into(), 20.into()))
}

/// `n/2 - sqrt(n w)/20`.
pub fn tribes_delta(n: usize, w: usize) -> Surd {
    &Surd::from(BigRational::new(n.into(), 2.into())) - &tribes_offset(n, w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TribesOutputs {
    /// `n/2 - s` on reject and `n/2 + s` on accept, with `s` the offset
    /// rounded up to a dyadic rational.
    #[default]
    Fixed,
    /// Label midpoints, the best outputs for this graph.
    Optimal,
}

pub fn tribes(n: usize, w: usize) -> Result<Robp> {
    tribes_with(n, w, TribesOutputs::Fixed)
}

/// Accepts iff every segment contains at least `w - 2` ones. Width `w`: a
/// reject sink plus an in-segment counter `0..=w-2`.
pub fn tribes_with(n: usize, w: usize, mode: TribesOutputs) -> Result<Robp> {
    let plan = TribesPlan::new(n, w)?;
    let mut segment_end = vec![false; n + 1];
    for &p in &plan.breakpoints[1..] {
        segment_end[p] = true;
    }
    let cap = plan.threshold as u32;
    let offset = ceil_to_dyadic(&tribes_offset(n, w), OFFSET_BITS);
    let half = BigRational::new(n.into(), 2.into());
    let (reject, accept) = (&half - &offset, &half + &offset);
    // `None` is the sink; `Some(c)` counts ones in the current segment.
    let p = build_layered(
        n,
        Alphabet::binary(),
        Some(0u32),
        w,
        |t, state, symbol| {
            let c = ((*state)? + symbol as u32).min(cap);
            if !segment_end[t + 1] {
                Some(c)
            } else if c < cap {
                None
            } else if t + 1 == n {
                Some(cap)
            } else {
                Some(0)
            }
        },
        |state| vec![if state.is_some() { accept.clone() } else { reject.clone() }],
    )?;
    match mode {
        TribesOutputs::Fixed => Ok(p),
        TribesOutputs::Optimal => Ok(with_optimal_outputs(&p)?.0),
    }
}

/// Parameters of the rounding counter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundingPlan {
    pub n: usize,
    pub k: usize,
    pub delta: BigRational,
    /// Counts are scaled by `(l-1)/l` at the rounding step.
    pub l: usize,
    /// Length of the exact suffix phase.
    pub m: usize,
    /// `floor((l-1)/l * (n-m))`, the total after rounding.
    pub rounded_total: usize,
}

impl RoundingPlan {
    pub fn new(n: usize, k: usize, delta: &BigRational) -> Result<Self> {
        if k < 2 || n < 10 * k {
            return Err(Error::precondition(format!(
                "rounding counter needs k >= 2 and n >= 10k, got n = {n}, k = {k}"
            )));
        }
        let nq = int(n as u64);
        if *delta < int(10) || *delta > &nq / int(10) {
            return Err(Error::precondition(format!(
                "rounding counter needs 10 <= delta <= n/10, got delta = {delta}"
            )));
        }
        let d1 = delta - BigRational::one();
        let l = ceil_sqrt(&(&nq / &d1)).to_usize().expect("fits usize") + 1;
        let m = floor_sqrt(&(&nq * &d1)).to_usize().expect("fits usize") - 1;
        Ok(RoundingPlan {
            n,
            k,
            delta: delta.clone(),
            l,
            m,
            rounded_total: (l - 1) * (n - m) / l,
        })
    }

    /// Layer at which rounding happens.
    pub fn switch_layer(&self) -> usize {
        self.n - self.m
    }

    /// Replaces `a` (summing to `n - m`) by `b` with each `b_j` the floor or
    /// ceiling of `(l-1)/l * a_j` and `sum(b) = rounded_total`. Floors first,
    /// then ceilings in ascending index order.
    pub fn round(&self, a: &mut [u32]) {
        let (l, scaled) = (self.l as u64, self.l as u64 - 1);
        let mut sum = 0usize;
        let mut fractional = Vec::with_capacity(a.len());
        for (j, x) in a.iter_mut().enumerate() {
            let num = scaled * *x as u64;
            if !num.is_multiple_of(l) {
                fractional.push(j);
            }
            *x = (num / l) as u32;
            sum += *x as usize;
        }
        for j in fractional.into_iter().take(self.rounded_total - sum) {
            a[j] += 1;
        }
    }

    /// `max{C(n-m+k-1, k-1), C(rounded_total+m+k-1, k-1)}`.
    pub fn width_bound(&self) -> BigUint {
        let k1 = (self.k - 1) as u64;
        binomial((self.n - self.m) as u64 + k1, k1)
            .max(binomial((self.rounded_total + self.m) as u64 + k1, k1))
    }
}

pub fn rounded_counter(n: usize, k: usize, delta: &BigRational) -> Result<Robp> {
    rounded_counter_within(n, k, delta, Budgets::default().max_width)
}

/// Counts exactly for `n - m` symbols, rescales the counts by `(l-1)/l`
/// with rounding, counts the last `m` symbols exactly on top, and outputs
/// `l/(l-1)` times the final vector.
pub fn rounded_counter_within(
    n: usize,
    k: usize,
    delta: &BigRational,
    max_width: u64,
) -> Result<Robp> {
    let plan = RoundingPlan::new(n, k, delta)?;
    width_budget_check(&plan.width_bound(), max_width)?;
    let alphabet = Alphabet::counter(k)?;
    let switch = plan.switch_layer();
    let total = |t: usize| if t < switch { t } else { plan.rounded_total + t - switch };
    let index = CompositionIndex::new(k, total(n).max(switch));
    let sizes = (0..=n).map(|t| index.count(total(t)) as usize).collect();
    let edges = (0..n)
        .map(|t| {
            if t + 1 == switch {
                count_edges(&index, t, total(t + 1), |b| plan.round(b))
            } else {
                count_edges(&index, total(t), total(t + 1), |_| ())
            }
        })
        .collect();
    let scale = BigRational::new(plan.l.into(), (plan.l - 1).into());
    let outputs = composition_outputs(&index, total(n), |x| &scale * int(x));
    let raw = Robp::from_parts(n, alphabet, sizes, edges, outputs);
    let pruned = raw.prune_unreachable()?;
    debug_assert!(BigUint::from(pruned.width()) <= plan.width_bound());
    Ok(pruned)
}
