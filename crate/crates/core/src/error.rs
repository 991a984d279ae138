use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {what} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("empty sequence")]
    EmptySequence,

    #[error("matrix {0} is not symmetric")]
    NotSymmetric(&'static str),

    #[error("matrix is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),

    #[error("invalid delay bounds: h1 = {h1}, h2 = {h2} (need 1 <= h1 <= h2)")]
    InvalidDelayBounds { h1: i64, h2: i64 },

    #[error("delay {h} outside [{h1}, {h2}]")]
    DelayOutOfRange { h: i64, h1: usize, h2: usize },

    #[error("initial segment has {found} states, expected h2 + 1 = {expected}")]
    InitialSegmentLength { expected: usize, found: usize },

    #[error("step {k} lacks the history required (available steps {first}..={last})")]
    InsufficientHistory { k: i64, first: i64, last: i64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("certificate format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
