//! Dense ranking of weak compositions.
//!
//! A weak composition of `total` into `parts` parts is a tuple of naturals
//! summing to `total`. Both the exact counter's states and the potential's
//! simplex grid `{x : sum(x) <= t}` are indexed through this ranking, in
//! lexicographic order of the tuple.

/// Pascal table of `C(a, b)` for `a <= max_top`, `b <= max_bottom`.
#[derive(Clone, Debug)]
pub struct BinomTable {
    max_bottom: usize,
    rows: Vec<u64>,
}

impl BinomTable {
    pub fn new(max_top: usize, max_bottom: usize) -> Self {
        let stride = max_bottom + 1;
        let mut rows = vec![0u64; (max_top + 1) * stride];
        for a in 0..=max_top {
            rows[a * stride] = 1;
            for b in 1..=max_bottom.min(a) {
                let v = rows[(a - 1) * stride + b - 1].saturating_add(rows[(a - 1) * stride + b]);
                rows[a * stride + b] = v;
            }
        }
        BinomTable { max_bottom, rows }
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> u64 {
        if b > a {
            return 0;
        }
        self.rows[a * (self.max_bottom + 1) + b]
    }
}

/// Ranks weak compositions with a fixed number of parts.
#[derive(Clone, Debug)]
pub struct CompositionIndex {
    parts: usize,
    table: BinomTable,
}

impl CompositionIndex {
    /// Supports totals up to `max_total`.
    pub fn new(parts: usize, max_total: usize) -> Self {
        assert!(parts >= 1);
        CompositionIndex {
            parts,
            table: BinomTable::new(max_total + parts, parts),
        }
    }

    pub fn parts(&self) -> usize {
        self.parts
    }

    /// Number of weak compositions of `total` into `parts` parts.
    pub fn count(&self, total: usize) -> u64 {
        self.count_with(total, self.parts)
    }

    fn count_with(&self, total: usize, parts: usize) -> u64 {
        self.table.get(total + parts - 1, parts - 1)
    }

    /// Lexicographic rank of `tuple` among compositions of its sum.
    /// Only the first `parts - 1` entries are read; the last is implied.
    #[inline]
    pub fn rank(&self, tuple: &[u32], total: usize) -> u64 {
        let mut rank = 0u64;
        let mut remaining = total;
        let mut parts = self.parts;
        for &a in &tuple[..self.parts - 1] {
            let a = a as usize;
            rank += self.count_with(remaining, parts) - self.count_with(remaining - a, parts);
            remaining -= a;
            parts -= 1;
        }
        rank
    }

    /// Every composition of `total`, in rank order.
    pub fn iter(&self, total: usize) -> Compositions {
        let mut first = vec![0u32; self.parts];
        first[self.parts - 1] = total as u32;
        Compositions {
            current: Some(first),
        }
    }
}

/// Lexicographic walk over weak compositions of a fixed total.
#[derive(Clone, Debug)]
pub struct Compositions {
    current: Option<Vec<u32>>,
}

impl Iterator for Compositions {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        let out = self.current.take()?;
        let mut next = out.clone();
        if advance(&mut next) {
            self.current = Some(next);
        }
        Some(out)
    }
}

/// Steps `tuple` to the lexicographically next weak composition of the same
/// total. Returns `false` (leaving `tuple` unspecified) after the last one.
#[inline]
pub fn advance(tuple: &mut [u32]) -> bool {
    let Some(last) = tuple.len().checked_sub(1) else {
        return false;
    };
    let mut suffix = 0;
    for i in (0..last).rev() {
        suffix += tuple[i + 1];
        if suffix > 0 {
            tuple[i] += 1;
            tuple[i + 1..last].fill(0);
            tuple[last] = suffix - 1;
            return true;
        }
    }
    false
}
