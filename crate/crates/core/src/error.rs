use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("budget exceeded: {what} needs {needed}, budget is {budget}")]
    Budget {
        what: &'static str,
        needed: String,
        budget: u64,
    },

    #[error("invalid program: {0}")]
    InvalidProgram(String),

    #[error("input has length {got}, program reads {expected} symbols")]
    LengthMismatch { expected: usize, got: usize },

    #[error("symbol {symbol} at position {position} is outside an alphabet of size {size}")]
    SymbolOutOfRange {
        position: usize,
        symbol: usize,
        size: usize,
    },

    #[error("outputs have arity {got}, problem needs {expected}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("problem {problem} does not match alphabet {alphabet}")]
    ProblemMismatch { problem: String, alphabet: String },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
