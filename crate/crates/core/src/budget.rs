/// Resource limits shared by the builders, the audits and the oracles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budgets {
    /// Largest layer any builder may produce.
    pub max_width: u64,
    /// Largest number of inputs exhaustive evaluation may enumerate.
    pub max_inputs: u64,
    /// Largest potential grid an audit may allocate.
    pub max_grid: u64,
    pub frontier_max_n: usize,
    pub frontier_max_w: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            max_width: 1 << 22,
            max_inputs: 1 << 24,
            max_grid: 1 << 24,
            frontier_max_n: 12,
            frontier_max_w: 4,
        }
    }
}
