//! Layered read-once branching programs over a finite alphabet.
//!
//! Vertices are addressed by `(layer, index)`. Layer `t` holds the states
//! reachable after `t` symbols; every non-final vertex has one outgoing edge
//! per symbol, stored densely as `edges[t][v * |alphabet| + symbol]`.
//! Final vertices carry a tuple of exact rational outputs.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;

use num_rational::BigRational;

use crate::error::{Error, Result};

/// Marks a missing edge in a candidate program.
pub const NO_EDGE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AlphabetKind {
    /// Letters `1..=k`; symbol index `i` is letter `i + 1`.
    Counter,
    /// Bit vectors in `{0,1}^k`; symbol index `i` has bit `j` equal to bit `j` of `i`.
    Parallel,
    /// `{0, 1}`, counting ones.
    Binary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet {
    kind: AlphabetKind,
    k: usize,
}

impl Alphabet {
    pub fn counter(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::precondition(format!("counter alphabet needs k >= 2, got {k}")));
        }
        Ok(Alphabet {
            kind: AlphabetKind::Counter,
            k,
        })
    }

    pub fn parallel(k: usize) -> Result<Self> {
        if !(1..=16).contains(&k) {
            return Err(Error::precondition(format!(
                "parallel alphabet needs 1 <= k <= 16, got {k}"
            )));
        }
        Ok(Alphabet {
            kind: AlphabetKind::Parallel,
            k,
        })
    }

    pub fn binary() -> Self {
        Alphabet {
            kind: AlphabetKind::Binary,
            k: 1,
        }
    }

    pub fn kind(&self) -> AlphabetKind {
        self.kind
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of symbols.
    pub fn size(&self) -> usize {
        match self.kind {
            AlphabetKind::Counter => self.k,
            AlphabetKind::Parallel => 1 << self.k,
            AlphabetKind::Binary => 2,
        }
    }

    /// Length of the frequency vector a program over this alphabet reports.
    pub fn arity(&self) -> usize {
        match self.kind {
            AlphabetKind::Counter | AlphabetKind::Parallel => self.k,
            AlphabetKind::Binary => 1,
        }
    }

    /// Whether reading `symbol` adds one to frequency coordinate `coord`.
    #[inline]
    pub fn counts(&self, symbol: usize, coord: usize) -> bool {
        match self.kind {
            AlphabetKind::Counter => symbol == coord,
            AlphabetKind::Parallel => (symbol >> coord) & 1 == 1,
            AlphabetKind::Binary => symbol == 1,
        }
    }

    /// The exact frequency vector of `input`.
    pub fn frequencies(&self, input: &[usize]) -> Vec<u32> {
        let mut freq = vec![0u32; self.arity()];
        for &s in input {
            for (j, f) in freq.iter_mut().enumerate() {
                if self.counts(s, j) {
                    *f += 1;
                }
            }
        }
        freq
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            AlphabetKind::Counter => write!(f, "counter({})", self.k),
            AlphabetKind::Parallel => write!(f, "parallel({})", self.k),
            AlphabetKind::Binary => f.write_str("binary"),
        }
    }
}

/// Output tuples of the final layer, with distinct values interned.
#[derive(Clone, Debug, Default)]
pub struct Outputs {
    arity: usize,
    values: Vec<BigRational>,
    ids: Vec<u32>,
}

impl Outputs {
    pub fn new(arity: usize) -> Self {
        Outputs {
            arity,
            values: Vec::new(),
            ids: Vec::new(),
        }
    }

    pub fn from_tuples(arity: usize, tuples: &[Vec<BigRational>]) -> Self {
        let mut builder = OutputsBuilder::new(arity);
        for t in tuples {
            builder.push(t);
        }
        builder.finish()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.ids.len().checked_div(self.arity).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, vertex: usize, coord: usize) -> &BigRational {
        &self.values[self.ids[vertex * self.arity + coord] as usize]
    }

    pub fn tuple(&self, vertex: usize) -> Vec<BigRational> {
        (0..self.arity).map(|j| self.get(vertex, j).clone()).collect()
    }

    pub fn tuples(&self) -> Vec<Vec<BigRational>> {
        (0..self.len()).map(|v| self.tuple(v)).collect()
    }
}

impl PartialEq for Outputs {
    fn eq(&self, other: &Self) -> bool {
        self.arity == other.arity
            && self.len() == other.len()
            && (0..self.len())
                .all(|v| (0..self.arity).all(|j| self.get(v, j) == other.get(v, j)))
    }
}

impl Eq for Outputs {}

/// Appends output tuples while sharing storage for repeated values.
#[derive(Debug)]
pub struct OutputsBuilder {
    out: Outputs,
    index: HashMap<BigRational, u32>,
}

impl OutputsBuilder {
    pub fn new(arity: usize) -> Self {
        OutputsBuilder {
            out: Outputs::new(arity),
            index: HashMap::new(),
        }
    }

    pub fn push(&mut self, tuple: &[BigRational]) {
        assert_eq!(tuple.len(), self.out.arity, "output tuple arity");
        for value in tuple {
            let next = self.out.values.len() as u32;
            let id = *self.index.entry(value.clone()).or_insert_with(|| {
                self.out.values.push(value.clone());
                next
            });
            self.out.ids.push(id);
        }
    }

    pub fn finish(self) -> Outputs {
        self.out
    }
}

/// A (candidate) read-once branching program.
///
/// Any structure can be represented, including broken ones; [`validate`]
/// decides whether it is a well-formed program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Robp {
    n: usize,
    alphabet: Alphabet,
    layer_sizes: Vec<usize>,
    edges: Vec<Vec<u32>>,
    outputs: Outputs,
}

impl Robp {
    /// Assembles a program from raw parts without checking it.
    pub fn from_parts(
        n: usize,
        alphabet: Alphabet,
        layer_sizes: Vec<usize>,
        edges: Vec<Vec<u32>>,
        outputs: Outputs,
    ) -> Self {
        Robp {
            n,
            alphabet,
            layer_sizes,
            edges,
            outputs,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn layer_size(&self, t: usize) -> usize {
        self.layer_sizes[t]
    }

    pub fn width(&self) -> usize {
        self.layer_sizes.iter().copied().max().unwrap_or(0)
    }

    pub fn vertex_count(&self) -> usize {
        self.layer_sizes.iter().sum()
    }

    /// Flat edge table of layer `t`, indexed by `v * |alphabet| + symbol`.
    pub fn layer_edges(&self, t: usize) -> &[u32] {
        &self.edges[t]
    }

    #[inline]
    pub fn target(&self, t: usize, v: usize, symbol: usize) -> u32 {
        self.edges[t][v * self.alphabet.size() + symbol]
    }

    pub fn outputs(&self) -> &Outputs {
        &self.outputs
    }

    pub fn output(&self, v: usize) -> Vec<BigRational> {
        self.outputs.tuple(v)
    }

    /// The same graph with new final-layer outputs.
    pub fn with_outputs(&self, tuples: &[Vec<BigRational>]) -> Robp {
        Robp {
            outputs: Outputs::from_tuples(
                tuples.first().map_or(self.alphabet.arity(), Vec::len),
                tuples,
            ),
            ..self.clone()
        }
    }

    /// Drops vertices that no input reaches and renumbers the rest, keeping
    /// relative order within each layer.
    pub fn prune_unreachable(&self) -> Result<Robp> {
        let sigma = self.alphabet.size();
        if self.layer_sizes.len() != self.n + 1 || self.edges.len() != self.n {
            return Err(Error::InvalidProgram("layer structure is malformed".into()));
        }
        let mut reach = vec![true; self.layer_sizes[0]];
        let mut new_sizes = Vec::with_capacity(self.n + 1);
        let mut new_edges = Vec::with_capacity(self.n);
        let mut renumber = renumbering(&reach);
        new_sizes.push(reach.iter().filter(|r| **r).count());
        for t in 0..self.n {
            let next_size = self.layer_sizes[t + 1];
            let mut next_reach = vec![false; next_size];
            for (v, _) in reach.iter().enumerate().filter(|(_, r)| **r) {
                for s in 0..sigma {
                    let u = self.edges[t][v * sigma + s];
                    if u as usize >= next_size {
                        return Err(Error::InvalidProgram(format!(
                            "edge ({t}, {v}, {s}) points outside layer {}",
                            t + 1
                        )));
                    }
                    next_reach[u as usize] = true;
                }
            }
            let next_renumber = renumbering(&next_reach);
            let mut layer = Vec::with_capacity(renumber.len() * sigma);
            for (v, _) in reach.iter().enumerate().filter(|(_, r)| **r) {
                for s in 0..sigma {
                    let u = self.edges[t][v * sigma + s] as usize;
                    layer.push(next_renumber[u]);
                }
            }
            new_edges.push(layer);
            new_sizes.push(next_reach.iter().filter(|r| **r).count());
            reach = next_reach;
            renumber = next_renumber;
        }
        let mut outputs = OutputsBuilder::new(self.outputs.arity);
        for (v, _) in reach.iter().enumerate().filter(|(_, r)| **r) {
            if v < self.outputs.len() {
                outputs.push(&self.outputs.tuple(v));
            }
        }
        Ok(Robp {
            n: self.n,
            alphabet: self.alphabet,
            layer_sizes: new_sizes,
            edges: new_edges,
            outputs: outputs.finish(),
        })
    }
}

fn renumbering(reach: &[bool]) -> Vec<u32> {
    let mut next = 0u32;
    reach
        .iter()
        .map(|&r| {
            if r {
                next += 1;
                next - 1
            } else {
                NO_EDGE
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    LayerCount { expected: usize, got: usize },
    StartLayer { size: usize },
    EmptyLayer,
    EdgeCount { expected: usize, got: usize },
    MissingEdge { symbol: usize },
    EdgeOutOfRange { symbol: usize, target: u32 },
    Unreachable,
    OutputCount { expected: usize, got: usize },
    OutputArity { expected: usize, got: usize },
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ViolationKind::*;
        match self {
            LayerCount { expected, got } => write!(f, "expected {expected} layers, found {got}"),
            StartLayer { size } => write!(f, "start layer has {size} vertices"),
            EmptyLayer => f.write_str("layer is empty"),
            EdgeCount { expected, got } => write!(f, "expected {expected} edge slots, found {got}"),
            MissingEdge { symbol } => write!(f, "no edge for symbol {symbol}"),
            EdgeOutOfRange { symbol, target } => {
                write!(f, "edge for symbol {symbol} points to missing vertex {target}")
            }
            Unreachable => f.write_str("unreachable"),
            OutputCount { expected, got } => {
                write!(f, "expected {expected} output tuples, found {got}")
            }
            OutputArity { expected, got } => {
                write!(f, "expected outputs of arity {expected}, found {got}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub layer: usize,
    /// `None` when the problem concerns the layer as a whole.
    pub vertex: Option<usize>,
    pub kind: ViolationKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub valid: bool,
    pub width: usize,
    pub layer_sizes: Vec<usize>,
    pub violations: Vec<Violation>,
}

/// Checks the structural rules of a branching program. Never fails; every
/// problem found is listed in the report.
pub fn validate(p: &Robp) -> ValidationReport {
    let mut violations = Vec::new();
    let mut push = |layer, vertex, kind| {
        violations.push(Violation {
            layer,
            vertex,
            kind,
        })
    };
    let sigma = p.alphabet.size();
    let sizes = &p.layer_sizes;

    if sizes.len() != p.n + 1 {
        push(
            sizes.len().min(p.n),
            None,
            ViolationKind::LayerCount {
                expected: p.n + 1,
                got: sizes.len(),
            },
        );
    }
    if let Some(&s0) = sizes.first() {
        if s0 != 1 {
            push(0, None, ViolationKind::StartLayer { size: s0 });
        }
    }
    for (t, &s) in sizes.iter().enumerate() {
        if s == 0 {
            push(t, None, ViolationKind::EmptyLayer);
        }
    }
    if p.edges.len() != p.n {
        push(
            0,
            None,
            ViolationKind::EdgeCount {
                expected: p.n,
                got: p.edges.len(),
            },
        );
    }

    let layers = sizes.len().min(p.n + 1);
    let mut reach: Vec<bool> = vec![true; sizes.first().copied().unwrap_or(0).min(1)];
    reach.resize(sizes.first().copied().unwrap_or(0), false);
    for t in 0..layers {
        let here = sizes[t];
        if t > 0 && reach.len() == here {
            for (v, r) in reach.iter().enumerate() {
                if !r {
                    push(t, Some(v), ViolationKind::Unreachable);
                }
            }
        }
        if t + 1 >= layers {
            break;
        }
        let next = sizes[t + 1];
        let mut next_reach = vec![false; next];
        match p.edges.get(t) {
            Some(edges) if edges.len() == here * sigma => {
                for v in 0..here {
                    for s in 0..sigma {
                        let u = edges[v * sigma + s];
                        if u == NO_EDGE {
                            push(t, Some(v), ViolationKind::MissingEdge { symbol: s });
                        } else if u as usize >= next {
                            push(
                                t,
                                Some(v),
                                ViolationKind::EdgeOutOfRange {
                                    symbol: s,
                                    target: u,
                                },
                            );
                        } else if reach.get(v).copied().unwrap_or(false) {
                            next_reach[u as usize] = true;
                        }
                    }
                }
            }
            Some(edges) => {
                push(
                    t,
                    None,
                    ViolationKind::EdgeCount {
                        expected: here * sigma,
                        got: edges.len(),
                    },
                );
                next_reach.fill(true);
            }
            None => next_reach.fill(true),
        }
        reach = next_reach;
    }

    if sizes.len() == p.n + 1 {
        let last = sizes[p.n];
        if p.outputs.len() != last {
            push(
                p.n,
                None,
                ViolationKind::OutputCount {
                    expected: last,
                    got: p.outputs.len(),
                },
            );
        }
        if p.outputs.arity() != p.alphabet.arity() {
            push(
                p.n,
                None,
                ViolationKind::OutputArity {
                    expected: p.alphabet.arity(),
                    got: p.outputs.arity(),
                },
            );
        }
    }

    ValidationReport {
        valid: violations.is_empty(),
        width: p.width(),
        layer_sizes: sizes.clone(),
        violations,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evaluation {
    pub output: Vec<BigRational>,
    /// One vertex index per layer, starting at the start vertex.
    pub path: Vec<usize>,
}

/// Runs `p` on `input` (symbol indices).
pub fn evaluate(p: &Robp, input: &[usize]) -> Result<Evaluation> {
    if input.len() != p.n {
        return Err(Error::LengthMismatch {
            expected: p.n,
            got: input.len(),
        });
    }
    let size = p.alphabet.size();
    if let Some((position, &symbol)) = input.iter().enumerate().find(|(_, &s)| s >= size) {
        return Err(Error::SymbolOutOfRange {
            position,
            symbol,
            size,
        });
    }
    if p.layer_sizes.len() != p.n + 1 || p.edges.len() != p.n {
        return Err(Error::InvalidProgram("layer structure is malformed".into()));
    }
    let mut path = Vec::with_capacity(p.n + 1);
    let mut v = 0usize;
    path.push(v);
    for (t, &s) in input.iter().enumerate() {
        let u = p
            .edges
            .get(t)
            .and_then(|e| e.get(v * size + s))
            .copied()
            .unwrap_or(NO_EDGE);
        if u as usize >= p.layer_sizes[t + 1] {
            return Err(Error::InvalidProgram(format!(
                "no valid edge from ({t}, {v}) on symbol {s}"
            )));
        }
        v = u as usize;
        path.push(v);
    }
    if v >= p.outputs.len() {
        return Err(Error::InvalidProgram(format!("final vertex {v} has no output")));
    }
    Ok(Evaluation {
        output: p.output(v),
        path,
    })
}

/// Builds a program by exploring states breadth-first from `start`.
///
/// `step(t, state, symbol)` gives the state after reading the `(t+1)`-th
/// symbol. States are numbered per layer in discovery order, so only
/// reachable states become vertices.
pub fn build_layered<S, F, O>(
    n: usize,
    alphabet: Alphabet,
    start: S,
    max_width: usize,
    mut step: F,
    mut output: O,
) -> Result<Robp>
where
    S: Clone + Eq + Hash,
    F: FnMut(usize, &S, usize) -> S,
    O: FnMut(&S) -> Vec<BigRational>,
{
    let sigma = alphabet.size();
    let mut layer = vec![start];
    let mut sizes = vec![1usize];
    let mut edges = Vec::with_capacity(n);
    for t in 0..n {
        let mut index: HashMap<S, u32> = HashMap::new();
        let mut next: Vec<S> = Vec::new();
        let mut table = Vec::with_capacity(layer.len() * sigma);
        for state in &layer {
            for s in 0..sigma {
                let succ = step(t, state, s);
                let id = *index.entry(succ.clone()).or_insert_with(|| {
                    next.push(succ);
                    (next.len() - 1) as u32
                });
                table.push(id);
            }
        }
        if next.len() > max_width {
            return Err(Error::Budget {
                what: "layer width",
                needed: next.len().to_string(),
                budget: max_width as u64,
            });
        }
        sizes.push(next.len());
        edges.push(table);
        layer = next;
    }
    let mut outputs = OutputsBuilder::new(alphabet.arity());
    for state in &layer {
        outputs.push(&output(state));
    }
    Ok(Robp::from_parts(n, alphabet, sizes, edges, outputs.finish()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::int;

    fn width_one(n: usize) -> Robp {
        build_layered(n, Alphabet::binary(), (), 1, |_, _, _| (), |_| vec![int(n as i64) / int(2)])
            .unwrap()
    }

    #[test]
    fn alphabet_sizes() {
        assert_eq!(Alphabet::counter(3).unwrap().size(), 3);
        assert_eq!(Alphabet::parallel(3).unwrap().size(), 8);
        assert_eq!(Alphabet::binary().size(), 2);
        assert!(Alphabet::counter(1).is_err());
        assert!(Alphabet::parallel(0).is_err());
        let par = Alphabet::parallel(2).unwrap();
        assert_eq!(par.frequencies(&[3, 1, 2, 0]), vec![2, 2]);
    }

    #[test]
    fn width_one_program_is_valid() {
        let p = width_one(4);
        let report = validate(&p);
        assert!(report.valid, "{:?}", report.violations);
        assert_eq!(report.width, 1);
        let ev = evaluate(&p, &[1, 0, 1, 1]).unwrap();
        assert_eq!(ev.output, vec![int(2)]);
        assert_eq!(ev.path, vec![0; 5]);
    }

    #[test]
    fn unreachable_vertex_is_reported() {
        // Layer 1 has two vertices but both edges go to vertex 0.
        let p = Robp::from_parts(
            1,
            Alphabet::binary(),
            vec![1, 2],
            vec![vec![0, 0]],
            Outputs::from_tuples(1, &[vec![int(0)], vec![int(1)]]),
        );
        let report = validate(&p);
        assert!(!report.valid);
        assert_eq!(
            report.violations,
            vec![Violation {
                layer: 1,
                vertex: Some(1),
                kind: ViolationKind::Unreachable
            }]
        );
        let pruned = p.prune_unreachable().unwrap();
        assert!(validate(&pruned).valid);
        assert_eq!(pruned.layer_sizes(), &[1, 1]);
    }

    #[test]
    fn structural_violations() {
        let p = Robp::from_parts(
            2,
            Alphabet::binary(),
            vec![2, 1],
            vec![vec![0, NO_EDGE, 0, 5]],
            Outputs::from_tuples(1, &[]),
        );
        let report = validate(&p);
        let kinds: Vec<_> = report.violations.iter().map(|v| v.kind.clone()).collect();
        assert!(kinds.contains(&ViolationKind::LayerCount { expected: 3, got: 2 }));
        assert!(kinds.contains(&ViolationKind::StartLayer { size: 2 }));
        assert!(kinds.contains(&ViolationKind::MissingEdge { symbol: 1 }));
        assert!(kinds.contains(&ViolationKind::EdgeOutOfRange { symbol: 1, target: 5 }));
    }

    #[test]
    fn evaluate_rejects_bad_inputs() {
        let p = width_one(3);
        assert!(matches!(
            evaluate(&p, &[0, 1]),
            Err(Error::LengthMismatch { expected: 3, got: 2 })
        ));
        assert!(matches!(
            evaluate(&p, &[0, 2, 1]),
            Err(Error::SymbolOutOfRange { position: 1, symbol: 2, .. })
        ));
    }

    #[test]
    fn outputs_are_interned() {
        let tuples = vec![vec![int(1), int(2)], vec![int(2), int(1)], vec![int(1), int(1)]];
        let out = Outputs::from_tuples(2, &tuples);
        assert_eq!(out.values.len(), 2);
        assert_eq!(out.tuples(), tuples);
    }
}
