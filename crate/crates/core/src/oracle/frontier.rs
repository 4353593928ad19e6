//! Exact `Delta(n, w)`: the least error of any width-`w` program for binary
//! counting on `n` bits.
//!
//! A program induces, per layer, the set of its vertices' count intervals;
//! each interval `R` of layer `t` must have `R` and `R + 1` inside intervals of
//! layer `t + 1`. Conversely any such interval system is realized by routing
//! each vertex to a containing interval. The search therefore runs over
//! interval systems, with two reductions:
//!
//! * obligations contained in another obligation are dropped, so they form a
//!   chain with increasing left and right ends;
//! * the next layer is the hulls of a split of that chain into
//!   `min(w, #obligations)` contiguous blocks. Any valid next layer contains,
//!   interval by interval, such a set of hulls, and smaller intervals only
//!   weaken later obligations.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;

use crate::budget::Budgets;
use crate::error::{Error, Result};
use crate::exact::{int, rational};
use crate::robp::{Alphabet, OutputsBuilder, Robp};

/// Closed interval `[lo, hi]` of counts.
pub type Interval = (u32, u32);

fn len((a, b): Interval) -> u32 {
    b - a
}

fn inside(inner: Interval, outer: Interval) -> bool {
    outer.0 <= inner.0 && inner.1 <= outer.1
}

/// Intervals per layer, with a containing successor for each obligation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalSystem {
    pub layers: Vec<Vec<Interval>>,
    /// `witnesses[t][i] = (j0, j1)`: layer `t+1` intervals containing
    /// `layers[t][i]` and `layers[t][i] + 1`.
    pub witnesses: Vec<Vec<(usize, usize)>>,
}

impl IntervalSystem {
    /// Checks the layer-0 base case and finds witnesses (the first
    /// containing interval, by index).
    pub fn from_layers(layers: Vec<Vec<Interval>>) -> Result<Self> {
        if layers.first().map(Vec::as_slice) != Some(&[(0, 0)][..]) {
            return Err(Error::precondition("layer 0 of an interval system must be {[0, 0]}"));
        }
        let mut witnesses = Vec::with_capacity(layers.len().saturating_sub(1));
        for t in 0..layers.len() - 1 {
            let find = |r: Interval| {
                layers[t + 1].iter().position(|&s| inside(r, s)).ok_or_else(|| {
                    Error::precondition(format!(
                        "interval [{}, {}] of layer {} has no container in layer {}",
                        r.0,
                        r.1,
                        t,
                        t + 1
                    ))
                })
            };
            let row = layers[t]
                .iter()
                .map(|&(a, b)| Ok((find((a, b))?, find((a + 1, b + 1))?)))
                .collect::<Result<Vec<_>>>()?;
            witnesses.push(row);
        }
        Ok(IntervalSystem { layers, witnesses })
    }

    pub fn n(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn width(&self) -> usize {
        self.layers.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn max_final_length(&self) -> u32 {
        self.layers.last().unwrap().iter().map(|&r| len(r)).max().unwrap_or(0)
    }

    /// Whether every layer is an antichain under containment.
    pub fn is_antichain(&self) -> bool {
        self.layers.iter().all(|layer| {
            layer.iter().enumerate().all(|(i, &r)| {
                layer.iter().enumerate().all(|(j, &s)| i == j || !inside(r, s))
            })
        })
    }
}

/// One vertex per interval, edges to the witnesses, unreachable vertices
/// dropped, outputs at interval midpoints.
pub fn system_to_robp(s: &IntervalSystem) -> Result<Robp> {
    let n = s.n();
    let sizes = s.layers.iter().map(Vec::len).collect();
    let edges = s
        .witnesses
        .iter()
        .map(|row| row.iter().flat_map(|&(j0, j1)| [j0 as u32, j1 as u32]).collect())
        .collect();
    let mut outputs = OutputsBuilder::new(1);
    for &(a, b) in &s.layers[n] {
        outputs.push(&[rational((a + b) as i64, 2)]);
    }
    Robp::from_parts(n, Alphabet::binary(), sizes, edges, outputs.finish()).prune_unreachable()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrontierPoint {
    pub n: usize,
    pub w: usize,
    /// Half the longest final interval of `witness`.
    pub delta_star: BigRational,
    pub witness: IntervalSystem,
}

/// Obligations of a layer, reduced to a chain: sorted, with left and right
/// ends strictly increasing.
fn obligations(state: &[Interval]) -> Vec<Interval> {
    let mut all: Vec<Interval> = state.iter().flat_map(|&(a, b)| [(a, b), (a + 1, b + 1)]).collect();
    all.sort_by(|x, y| x.0.cmp(&y.0).then(y.1.cmp(&x.1)));
    let mut chain: Vec<Interval> = Vec::with_capacity(all.len());
    for r in all {
        if chain.last().is_none_or(|last| r.1 > last.1) {
            chain.push(r);
        }
    }
    chain
}

/// Hulls of every split of `chain` into `blocks` contiguous nonempty blocks
/// whose hulls have length at most `max_len`, in lexicographic order of cut
/// positions.
fn splits(chain: &[Interval], blocks: usize, max_len: u32, out: &mut Vec<Vec<Interval>>) {
    fn rec(
        chain: &[Interval],
        start: usize,
        blocks: usize,
        max_len: u32,
        acc: &mut Vec<Interval>,
        out: &mut Vec<Vec<Interval>>,
    ) {
        let m = chain.len();
        if blocks == 1 {
            let hull = (chain[start].0, chain[m - 1].1);
            if len(hull) <= max_len {
                acc.push(hull);
                out.push(acc.clone());
                acc.pop();
            }
            return;
        }
        // The block `start..=end` leaves `blocks - 1` nonempty blocks after it.
        for end in start..=m - blocks {
            let hull = (chain[start].0, chain[end].1);
            if len(hull) > max_len {
                break;
            }
            acc.push(hull);
            rec(chain, end + 1, blocks - 1, max_len, acc, out);
            acc.pop();
        }
    }
    rec(chain, 0, blocks, max_len, &mut Vec::with_capacity(blocks), out);
}

type State = Vec<Interval>;

/// Layers of reachable states, each mapped to its first parent, when some
/// width-`w` system keeps every interval within length `max_len`.
fn reachable(n: usize, w: usize, max_len: u32) -> Option<Vec<BTreeMap<State, State>>> {
    let mut layers: Vec<BTreeMap<State, State>> = vec![BTreeMap::from([(vec![(0, 0)], vec![])])];
    let mut buf = Vec::new();
    for _ in 0..n {
        let mut next: BTreeMap<State, State> = BTreeMap::new();
        for state in layers.last().unwrap().keys() {
            let chain = obligations(state);
            buf.clear();
            splits(&chain, w.min(chain.len()), max_len, &mut buf);
            for succ in buf.drain(..) {
                next.entry(succ).or_insert_with(|| state.clone());
            }
        }
        if next.is_empty() {
            return None;
        }
        layers.push(next);
    }
    Some(layers)
}

/// Least error over all width-`w` programs for binary counting on `n`
/// bits, with a witness system attaining it.
pub fn frontier(n: usize, w: usize, budgets: &Budgets) -> Result<FrontierPoint> {
    if w == 0 {
        return Err(Error::precondition("width must be positive"));
    }
    if w > n {
        let layers = (0..=n as u32).map(|t| (0..=t).map(|c| (c, c)).collect()).collect();
        return Ok(FrontierPoint {
            n,
            w,
            delta_star: int(0),
            witness: IntervalSystem::from_layers(layers)?,
        });
    }
    if n > budgets.frontier_max_n {
        return Err(Error::Budget {
            what: "frontier length",
            needed: n.to_string(),
            budget: budgets.frontier_max_n as u64,
        });
    }
    if w > budgets.frontier_max_w {
        return Err(Error::Budget {
            what: "frontier width",
            needed: w.to_string(),
            budget: budgets.frontier_max_w as u64,
        });
    }
    // Length n is always feasible (one interval per layer).
    let (mut lo, mut hi) = (0u32, n as u32);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if reachable(n, w, mid).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let layers = reachable(n, w, lo).expect("feasible at the searched length");
    let mut states = vec![layers[n].keys().next().unwrap().clone()];
    for t in (1..=n).rev() {
        let parent = layers[t][&states[0]].clone();
        states.insert(0, parent);
    }
    Ok(FrontierPoint {
        n,
        w,
        delta_star: rational(lo as i64, 2),
        witness: IntervalSystem::from_layers(states)?,
    })
}

/// Largest `n` and `w` [`frontier_brute_force`] accepts.
pub const BRUTE_FORCE_MAX_N: usize = 6;
pub const BRUTE_FORCE_MAX_W: usize = 3;

/// `Delta(n, w)` by enumerating every edge function of every layer. Two
/// programs whose current layers carry the same multiset of labels have the
/// same futures, so states are label multisets.
pub fn frontier_brute_force(n: usize, w: usize) -> Result<BigRational> {
    if w == 0 {
        return Err(Error::precondition("width must be positive"));
    }
    if n > BRUTE_FORCE_MAX_N || w > BRUTE_FORCE_MAX_W {
        return Err(Error::precondition(format!(
            "brute force handles n <= {BRUTE_FORCE_MAX_N}, w <= {BRUTE_FORCE_MAX_W}; got n = {n}, w = {w}"
        )));
    }
    let mut layer: BTreeSet<State> = BTreeSet::from([vec![(0, 0)]]);
    for _ in 0..n {
        let mut next = BTreeSet::new();
        for state in &layer {
            let slots = 2 * state.len();
            for size in 1..=w {
                let mut targets = vec![0usize; slots];
                loop {
                    let mut hulls: Vec<Option<Interval>> = vec![None; size];
                    for (slot, &v) in targets.iter().enumerate() {
                        let (a, b) = state[slot / 2];
                        let shift = (slot % 2) as u32;
                        let r = (a + shift, b + shift);
                        hulls[v] = Some(match hulls[v] {
                            None => r,
                            Some((c, d)) => (c.min(r.0), d.max(r.1)),
                        });
                    }
                    let mut labels: State = hulls.into_iter().flatten().collect();
                    labels.sort_unstable();
                    next.insert(labels);
                    // Odometer over edge functions `slots -> size`.
                    let mut i = 0;
                    while i < slots && targets[i] + 1 == size {
                        targets[i] = 0;
                        i += 1;
                    }
                    if i == slots {
                        break;
                    }
                    targets[i] += 1;
                }
            }
        }
        layer = next;
    }
    let best = layer
        .iter()
        .map(|s| s.iter().map(|&r| len(r)).max().unwrap())
        .min()
        .unwrap();
    Ok(rational(best as i64, 2))
}
