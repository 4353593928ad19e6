//! Rectangle labels and exact verification.
//!
//! Each vertex `v` in layer `t` is labelled with the box `[lo_1, hi_1] x ... x
//! [lo_d, hi_d]` where `lo_j`/`hi_j` are the smallest/largest frequency of
//! coordinate `j` over all length-`t` prefixes that reach `v`. Labels are
//! computed by a forward sweep: the label of `v` is the coordinatewise hull of
//! `label(u) + shift(z)` over its incoming edges `u --z--> v`. Both endpoints
//! of every interval are attained by some prefix, which is what makes
//! [`verify`] a decision procedure rather than a sufficient test.

use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::Zero;
use serde_json::json;

use crate::error::{Error, Result};
use crate::exact::{format_rational, int, Surd};
use crate::robp::{validate, Alphabet, AlphabetKind, Robp, ViolationKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelMode {
    /// All `k` letter frequencies of a counter alphabet.
    CounterFull,
    /// The first `k - 1` letter frequencies; the last letter shifts nothing.
    CounterPotential,
    /// All `k` bit coordinates of a parallel alphabet.
    Parallel,
    /// The number of ones.
    Binary,
}

impl LabelMode {
    /// The mode that covers every reported coordinate of `alphabet`.
    pub fn full_for(alphabet: Alphabet) -> Self {
        match alphabet.kind() {
            AlphabetKind::Counter => LabelMode::CounterFull,
            AlphabetKind::Parallel => LabelMode::Parallel,
            AlphabetKind::Binary => LabelMode::Binary,
        }
    }

    /// The mode the potential audits read.
    pub fn potential_for(alphabet: Alphabet) -> Self {
        match alphabet.kind() {
            AlphabetKind::Counter => LabelMode::CounterPotential,
            _ => LabelMode::full_for(alphabet),
        }
    }

    pub fn dims(&self, alphabet: Alphabet) -> usize {
        match self {
            LabelMode::CounterPotential => alphabet.k() - 1,
            _ => alphabet.arity(),
        }
    }

    fn check(&self, alphabet: Alphabet) -> Result<()> {
        let ok = matches!(
            (self, alphabet.kind()),
            (LabelMode::CounterFull | LabelMode::CounterPotential, AlphabetKind::Counter)
                | (LabelMode::Parallel, AlphabetKind::Parallel)
                | (LabelMode::Binary, AlphabetKind::Binary)
        );
        if ok {
            Ok(())
        } else {
            Err(Error::precondition(format!(
                "label mode {self:?} does not apply to alphabet {alphabet}"
            )))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RectLabel {
    pub lo: Vec<u32>,
    pub hi: Vec<u32>,
}

impl RectLabel {
    pub fn contains(&self, point: &[u32]) -> bool {
        point
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (lo, hi))| lo <= x && x <= hi)
    }

    pub fn contains_rect(&self, other: &RectLabel) -> bool {
        (0..self.lo.len()).all(|j| self.lo[j] <= other.lo[j] && other.hi[j] <= self.hi[j])
    }
}

/// Labels of one layer, stored as `[lo_1..lo_d, hi_1..hi_d]` per vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerLabels {
    dims: usize,
    data: Vec<u32>,
}

impl LayerLabels {
    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        if self.dims == 0 {
            0
        } else {
            self.data.len() / (2 * self.dims)
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn lo(&self, v: usize) -> &[u32] {
        &self.data[2 * self.dims * v..2 * self.dims * v + self.dims]
    }

    #[inline]
    pub fn hi(&self, v: usize) -> &[u32] {
        &self.data[2 * self.dims * v + self.dims..2 * self.dims * (v + 1)]
    }

    pub fn get(&self, v: usize) -> RectLabel {
        RectLabel {
            lo: self.lo(v).to_vec(),
            hi: self.hi(v).to_vec(),
        }
    }

    pub fn rects(&self) -> impl Iterator<Item = (&[u32], &[u32])> {
        self.data.chunks_exact(2 * self.dims).map(move |c| c.split_at(self.dims))
    }

    fn start(dims: usize) -> Self {
        LayerLabels {
            dims,
            data: vec![0; 2 * dims],
        }
    }
}

/// A program together with the labels of every layer.
#[derive(Clone, Debug)]
pub struct LabeledRobp<'a> {
    pub program: &'a Robp,
    pub mode: LabelMode,
    pub layers: Vec<LayerLabels>,
}

impl LabeledRobp<'_> {
    pub fn dims(&self) -> usize {
        self.mode.dims(self.program.alphabet())
    }

    pub fn label(&self, t: usize, v: usize) -> RectLabel {
        self.layers[t].get(v)
    }

    /// `layer,vertex,lo_1..lo_d,hi_1..hi_d` rows with a header line.
    pub fn to_csv(&self) -> String {
        let d = self.dims();
        let mut out = String::from("layer,vertex");
        for j in 1..=d {
            write!(out, ",lo_{j}").unwrap();
        }
        for j in 1..=d {
            write!(out, ",hi_{j}").unwrap();
        }
        out.push('\n');
        for (t, layer) in self.layers.iter().enumerate() {
            for (v, (lo, hi)) in layer.rects().enumerate() {
                write!(out, "{t},{v}").unwrap();
                for x in lo.iter().chain(hi) {
                    write!(out, ",{x}").unwrap();
                }
                out.push('\n');
            }
        }
        out
    }
}

pub(crate) fn ensure_valid(p: &Robp, ignore_outputs: bool) -> Result<()> {
    let report = validate(p);
    let blocking: Vec<_> = report
        .violations
        .iter()
        .filter(|v| {
            !(ignore_outputs
                && matches!(
                    v.kind,
                    ViolationKind::OutputCount { .. } | ViolationKind::OutputArity { .. }
                ))
        })
        .collect();
    match blocking.first() {
        None => Ok(()),
        Some(v) => Err(Error::InvalidProgram(format!(
            "layer {}, vertex {:?}: {} ({} violations)",
            v.layer,
            v.vertex,
            v.kind,
            blocking.len()
        ))),
    }
}

/// Streams the labels of layers `0..=n` without keeping earlier layers.
pub struct LabelSweep<'a> {
    program: &'a Robp,
    shifts: Vec<Vec<u32>>,
    current: Option<LayerLabels>,
    t: usize,
}

impl<'a> LabelSweep<'a> {
    pub fn new(program: &'a Robp, mode: LabelMode) -> Result<Self> {
        let alphabet = program.alphabet();
        mode.check(alphabet)?;
        ensure_valid(program, true)?;
        let dims = mode.dims(alphabet);
        let shifts = (0..alphabet.size())
            .map(|s| (0..dims).map(|j| alphabet.counts(s, j) as u32).collect())
            .collect();
        Ok(LabelSweep {
            program,
            shifts,
            current: Some(LayerLabels::start(dims)),
            t: 0,
        })
    }

    fn advance(&self, here: &LayerLabels) -> LayerLabels {
        let d = here.dims;
        let t = self.t;
        let sigma = self.shifts.len();
        let next_size = self.program.layer_size(t + 1);
        let mut data = Vec::with_capacity(next_size * 2 * d);
        for _ in 0..next_size {
            data.extend(std::iter::repeat_n(u32::MAX, d));
            data.extend(std::iter::repeat_n(0, d));
        }
        let edges = self.program.layer_edges(t);
        for (u, chunk) in here.data.chunks_exact(2 * d).enumerate() {
            let (lo, hi) = chunk.split_at(d);
            for (s, shift) in self.shifts.iter().enumerate() {
                let v = edges[u * sigma + s] as usize;
                let dst = &mut data[2 * d * v..2 * d * (v + 1)];
                for j in 0..d {
                    let a = lo[j] + shift[j];
                    let b = hi[j] + shift[j];
                    if a < dst[j] {
                        dst[j] = a;
                    }
                    if b > dst[d + j] {
                        dst[d + j] = b;
                    }
                }
            }
        }
        LayerLabels { dims: d, data }
    }
}

impl Iterator for LabelSweep<'_> {
    type Item = LayerLabels;

    fn next(&mut self) -> Option<LayerLabels> {
        let here = self.current.take()?;
        if self.t < self.program.n() {
            self.current = Some(self.advance(&here));
            self.t += 1;
        }
        Some(here)
    }
}

/// Labels of every layer of `p`.
pub fn compute_labels(p: &Robp, mode: LabelMode) -> Result<LabeledRobp<'_>> {
    let layers = LabelSweep::new(p, mode)?.collect();
    Ok(LabeledRobp {
        program: p,
        mode,
        layers,
    })
}

/// Labels of the final layer only.
pub fn final_labels(p: &Robp, mode: LabelMode) -> Result<LayerLabels> {
    Ok(LabelSweep::new(p, mode)?.last().expect("at least one layer"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Problem {
    /// Approximate the number of ones.
    Binary,
    /// Approximate every letter frequency over `[k]`.
    Counter(usize),
    /// Approximate every coordinate's number of ones over `{0,1}^k`.
    Parallel(usize),
}

impl Problem {
    pub fn for_alphabet(alphabet: Alphabet) -> Self {
        match alphabet.kind() {
            AlphabetKind::Counter => Problem::Counter(alphabet.k()),
            AlphabetKind::Parallel => Problem::Parallel(alphabet.k()),
            AlphabetKind::Binary => Problem::Binary,
        }
    }

    pub fn arity(&self) -> usize {
        match *self {
            Problem::Binary => 1,
            Problem::Counter(k) | Problem::Parallel(k) => k,
        }
    }

    pub(crate) fn check(&self, p: &Robp) -> Result<()> {
        let alphabet = p.alphabet();
        if Problem::for_alphabet(alphabet) != *self {
            return Err(Error::ProblemMismatch {
                problem: format!("{self:?}"),
                alphabet: alphabet.to_string(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Worst {
    pub vertex: usize,
    pub coordinate: usize,
    /// How far the worst one-sided error exceeds the allowed error.
    pub violation: Surd,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyCertificate {
    pub valid: bool,
    pub delta: Surd,
    /// Largest one-sided error over final vertices and coordinates.
    pub max_halfwidth: BigRational,
    pub worst: Option<Worst>,
}

impl VerifyCertificate {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "valid": self.valid,
            "delta": self.delta.to_string(),
            "max_halfwidth": format_rational(&self.max_halfwidth),
            "worst": self.worst.as_ref().map(|w| json!({
                "vertex": w.vertex,
                "coordinate": w.coordinate,
                "violation": w.violation.to_string(),
            })),
        })
    }
}

/// Decides whether `p` solves `problem` with additive error at most `delta`
/// on every input.
pub fn verify(p: &Robp, problem: Problem, delta: impl Into<Surd>) -> Result<VerifyCertificate> {
    let delta = delta.into();
    if delta.is_negative() {
        return Err(Error::precondition("delta must be nonnegative"));
    }
    problem.check(p)?;
    ensure_valid(p, true)?;
    let outputs = p.outputs();
    if outputs.arity() != problem.arity() {
        return Err(Error::ArityMismatch {
            expected: problem.arity(),
            got: outputs.arity(),
        });
    }
    if outputs.len() != p.layer_size(p.n()) {
        return Err(Error::InvalidProgram("final layer outputs are incomplete".into()));
    }
    let labels = final_labels(p, LabelMode::full_for(p.alphabet()))?;

    let mut best: Option<(BigRational, usize, usize)> = None;
    for (v, (lo, hi)) in labels.rects().enumerate() {
        for j in 0..labels.dims() {
            let out = outputs.get(v, j);
            let up = int(hi[j]) - out;
            let down = out - int(lo[j]);
            let err = if up > down { up } else { down };
            if best.as_ref().is_none_or(|(b, _, _)| err > *b) {
                best = Some((err, v, j));
            }
        }
    }
    let (max_halfwidth, vertex, coordinate) = best.expect("final layer is nonempty");
    let excess = &Surd::from(&max_halfwidth) - &delta;
    let valid = excess.signum() != std::cmp::Ordering::Greater;
    Ok(VerifyCertificate {
        valid,
        worst: (!valid).then_some(Worst {
            vertex,
            coordinate,
            violation: excess,
        }),
        delta,
        max_halfwidth,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimalError {
    pub delta_star: BigRational,
    /// Midpoint outputs, one tuple per final vertex.
    pub outputs: Vec<Vec<BigRational>>,
}

/// Smallest error any output assignment achieves on the graph of `p`, with
/// the midpoint assignment that attains it. Current outputs are ignored.
pub fn minimal_error(p: &Robp, problem: Problem) -> Result<MinimalError> {
    problem.check(p)?;
    let labels = final_labels(p, LabelMode::full_for(p.alphabet()))?;
    let two = int(2);
    let mut delta_star = BigRational::zero();
    let mut outputs = Vec::with_capacity(labels.len());
    for (lo, hi) in labels.rects() {
        let mut tuple = Vec::with_capacity(lo.len());
        for j in 0..lo.len() {
            let half = int(hi[j] - lo[j]) / &two;
            if half > delta_star {
                delta_star = half;
            }
            tuple.push(int(lo[j] + hi[j]) / &two);
        }
        outputs.push(tuple);
    }
    Ok(MinimalError {
        delta_star,
        outputs,
    })
}

/// `p` with its outputs replaced by the optimal midpoints.
pub fn with_optimal_outputs(p: &Robp) -> Result<(Robp, BigRational)> {
    let best = minimal_error(p, Problem::for_alphabet(p.alphabet()))?;
    Ok((p.with_outputs(&best.outputs), best.delta_star))
}
