use thiserror::Error;

use crate::machine::RuleKey;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the simulator and its verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("line {line}: {message}")]
    Semantic { line: usize, message: String },

    #[error("invalid machine: {0}")]
    InvalidMachine(String),

    #[error("no rule for key {0}")]
    MissingRule(RuleKey),

    #[error("tape label exceeds 128-bit capacity")]
    LabelCapacity,

    #[error("cannot measure a zero-norm state")]
    ZeroNorm,

    #[error("truncation window too small: dynamics reach head position {reached}, need radius >= {required}")]
    WindowTooSmall { reached: i64, required: i64 },

    #[error("truncated basis exceeds cap of {cap} configurations")]
    BasisOverflow { cap: usize },

    #[error("truncation depth {available} is below the {required} steps the check needs")]
    InsufficientDepth { required: usize, available: usize },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
