//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probability {value} outside [0, 1]")]
    InvalidProbability { value: f64 },

    #[error("defective count {k} exceeds item count {n}")]
    KExceedsN { k: usize, n: usize },

    #[error("item index {index} out of range for {n} items")]
    ItemOutOfRange { index: usize, n: usize },

    #[error("item list not strictly increasing at position {position}")]
    NotStrictlyIncreasing { position: usize },

    #[error("{what} must be at least 1")]
    ZeroCount { what: &'static str },

    #[error("outcome vector has {got} entries but the design has {expected} tests")]
    LengthMismatch { got: usize, expected: usize },

    #[error("positive test {test} contains no possible defectives")]
    InconsistentOutcomes { test: usize },

    #[error("constraint item {index} is not an LP variable")]
    NotAVariable { index: usize },

    #[error("simplex pivot cap {cap} exceeded")]
    PivotCapExceeded { cap: usize },

    #[error("objective unbounded below")]
    Unbounded,

    #[error("crude rounding applied to a fractional solution")]
    FractionalSolution,

    #[error("rounding requires an optimal solution, got {status}")]
    NotOptimal { status: &'static str },

    #[error("{count} possible defectives exceed the exhaustive oracle capacity of {cap}")]
    OracleTooLarge { count: usize, cap: usize },

    #[error("parameter {what} outside its domain: {value}")]
    OutOfDomain { what: &'static str, value: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid sweep config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
