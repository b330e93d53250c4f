//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by score ingestion, transforms, combiners, and calibration.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a precondition (non-finite input,
    /// dimension mismatch, bad configuration).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A value is outside the mathematical domain of the requested function,
    /// e.g. a quantile at p = 0 or a log of a zero p-value.
    #[error("domain error: {0}")]
    Domain(String),

    /// A score matrix contains a NaN or infinite entry.
    #[error("non-finite value at row {row}, column `{column}`")]
    NonFinite { row: usize, column: String },

    /// Not enough samples to fit or estimate the requested quantity.
    #[error("too few samples: need at least {need}, got {got}")]
    TooFewSamples { need: usize, got: usize },

    /// A referenced column does not exist.
    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    /// Column sets of two matrices disagree.
    #[error("schema mismatch: missing columns {missing:?}, unexpected columns {extra:?}")]
    SchemaMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },

    /// An operation that needs at least one element received none.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// A distribution collapsed to a point mass (e.g. a Beta with a zero
    /// shape parameter).
    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    /// An iterative numeric routine failed to converge.
    #[error("numeric failure in {what}: residual {residual:e}")]
    Numeric { what: &'static str, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
