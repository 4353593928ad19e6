//! Misra-Gries heavy hitters with `k` counters, and the estimate it yields
//! for every element's frequency.

use std::collections::BTreeMap;
use std::io::BufRead;

use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{int, rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MgSummary {
    k: usize,
    universe: usize,
    n_seen: u64,
    counters: BTreeMap<usize, u64>,
}

impl MgSummary {
    pub fn new(k: usize, universe: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::precondition("heavy hitters need k >= 1"));
        }
        Ok(MgSummary {
            k,
            universe,
            n_seen: 0,
            counters: BTreeMap::new(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn n_seen(&self) -> u64 {
        self.n_seen
    }

    pub fn counters(&self) -> &BTreeMap<usize, u64> {
        &self.counters
    }

    /// Stored count; `0` when `element` holds no counter.
    pub fn stored(&self, element: usize) -> u64 {
        self.counters.get(&element).copied().unwrap_or(0)
    }

    pub fn update(&mut self, element: usize) -> Result<()> {
        if element >= self.universe {
            return Err(Error::precondition(format!(
                "element {element} is outside the universe [0, {})",
                self.universe
            )));
        }
        self.n_seen += 1;
        if let Some(c) = self.counters.get_mut(&element) {
            *c += 1;
        } else if self.counters.len() < self.k {
            self.counters.insert(element, 1);
        } else {
            self.counters.retain(|_, c| {
                *c -= 1;
                *c > 0
            });
        }
        Ok(())
    }

    pub fn extend(&mut self, stream: impl IntoIterator<Item = usize>) -> Result<()> {
        stream.into_iter().try_for_each(|e| self.update(e))
    }

    /// Survivors in increasing order, padded to `k` distinct elements with
    /// the smallest unused elements at estimate `0`.
    pub fn finalize(&self) -> Result<HeavyHittersOutput> {
        if self.universe < self.k {
            return Err(Error::precondition(format!(
                "cannot list {} distinct elements from a universe of {}",
                self.k, self.universe
            )));
        }
        let mut list: Vec<usize> = self.counters.keys().copied().collect();
        let mut estimates: Vec<u64> = self.counters.values().copied().collect();
        let mut candidate = 0;
        while list.len() < self.k {
            if !self.counters.contains_key(&candidate) {
                list.push(candidate);
                estimates.push(0);
            }
            candidate += 1;
        }
        Ok(HeavyHittersOutput {
            n: self.n_seen,
            k: self.k,
            universe: self.universe,
            list,
            estimates,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HeavyHittersOutput {
    pub n: u64,
    pub k: usize,
    pub universe: usize,
    /// Exactly `k` distinct elements.
    pub list: Vec<usize>,
    pub estimates: Vec<u64>,
}

impl HeavyHittersOutput {
    pub fn estimate_of(&self, element: usize) -> Option<u64> {
        self.list
            .iter()
            .position(|&u| u == element)
            .map(|i| self.estimates[i])
    }

    /// Frequency estimate within `n/(2k)` of the truth: the listed estimate
    /// plus `n/(2k)`, or `n/(2k)` alone for unlisted elements.
    pub fn to_approx_counts(&self, query: usize) -> Result<BigRational> {
        if query >= self.universe {
            return Err(Error::precondition(format!(
                "query {query} is outside the universe [0, {})",
                self.universe
            )));
        }
        let half = rational(self.n as i64, 2 * self.k as i64);
        Ok(match self.estimate_of(query) {
            Some(f) => int(f) + half,
            None => half,
        })
    }
}

/// Whitespace-separated decimal elements.
pub fn parse_stream(text: &str) -> Result<Vec<usize>> {
    text.split_whitespace()
        .enumerate()
        .map(|(i, tok)| {
            tok.parse()
                .map_err(|_| Error::parse(format!("token {}", i + 1), format!("{tok:?} is not an element index")))
        })
        .collect()
}

pub fn read_stream<R: BufRead>(input: R) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (line_no, line) in input.lines().enumerate() {
        let line = line?;
        for tok in line.split_whitespace() {
            out.push(tok.parse().map_err(|_| {
                Error::parse(format!("line {}", line_no + 1), format!("{tok:?} is not an element index"))
            })?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(k: usize, universe: usize, stream: &[usize]) -> MgSummary {
        let mut s = MgSummary::new(k, universe).unwrap();
        s.extend(stream.iter().copied()).unwrap();
        s
    }

    #[test]
    fn hand_simulations() {
        assert_eq!(run(2, 3, &[0, 0, 0]).counters(), &BTreeMap::from([(0, 3)]));
        assert!(run(2, 3, &[0, 1, 2]).counters().is_empty());
        assert_eq!(run(4, 10, &[7; 25]).stored(7), 25);
    }

    #[test]
    fn finalize_pads_with_unused_elements() {
        let out = run(3, 10, &[4; 12]).finalize().unwrap();
        assert_eq!(out.list, vec![4, 0, 1]);
        assert_eq!(out.estimates, vec![12, 0, 0]);
        assert_eq!(out.to_approx_counts(4).unwrap(), int(14));
        assert_eq!(out.to_approx_counts(9).unwrap(), int(2));
        assert!(run(3, 2, &[0]).finalize().is_err());
    }

    #[test]
    fn distinct_stream_estimates() {
        let stream: Vec<usize> = (0..12).collect();
        let out = run(3, 12, &stream).finalize().unwrap();
        assert_eq!(out.list.len(), 3);
        for (&u, &f) in out.list.iter().zip(&out.estimates) {
            assert!(f <= 1, "{u}");
        }
    }

    #[test]
    fn out_of_range() {
        let mut s = MgSummary::new(2, 5).unwrap();
        assert!(s.update(5).is_err());
        assert!(MgSummary::new(0, 5).is_err());
    }

    #[test]
    fn stream_parsing() {
        assert_eq!(parse_stream(" 1 2\n3\t4 ").unwrap(), vec![1, 2, 3, 4]);
        let err = parse_stream("1 x").unwrap_err();
        assert!(err.to_string().contains("token 2"));
        assert_eq!(read_stream("5 6\n7".as_bytes()).unwrap(), vec![5, 6, 7]);
        assert!(read_stream("5\n-1".as_bytes()).unwrap_err().to_string().contains("line 2"));
    }
}
