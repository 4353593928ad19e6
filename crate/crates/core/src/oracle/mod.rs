//! Ground truth for small instances: exhaustive evaluation, random
//! programs, and the exact error/width frontier for binary counting.

mod exhaustive;
mod frontier;
mod random;

pub use exhaustive::{enumerate_labels, exhaustive_verify};
pub use frontier::{frontier, frontier_brute_force, system_to_robp, FrontierPoint, Interval, IntervalSystem};
pub use random::random_robp;
