//! Read-once branching programs for approximate counting: exact
//! verification, potential-function audits, width/error bounds, explicit
//! constructions, brute-force oracles and a Misra-Gries summary.

pub mod bounds;
pub mod budget;
pub mod combin;
pub mod constructions;
pub mod error;
pub mod exact;
pub mod format;
pub mod labeling;
pub mod oracle;
pub mod potential;
pub mod robp;
pub mod streaming;

pub use budget::Budgets;
pub use error::{Error, Result};
pub use exact::Surd;
pub use labeling::{
    compute_labels, minimal_error, verify, LabelMode, LabeledRobp, Problem, RectLabel,
    VerifyCertificate,
};
pub use robp::{evaluate, validate, Alphabet, AlphabetKind, Robp, ValidationReport};
