//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any operation in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text (Matrix Market, scheme JSON, checkpoints).
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A caller-supplied argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A rectangle or index fell outside the matrix.
    #[error("out of bounds: {0}")]
    Bounds(String),

    /// An index structure would exceed the configured memory cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Reordering requires a structurally symmetric matrix.
    #[error("asymmetric pattern: entry ({0}, {1}) has no mirror")]
    AsymmetricPattern(usize, usize),

    /// A reward or gradient left the finite range during training.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A mapping scheme does not cover every nonzero.
    #[error("incomplete coverage: nonzero at ({row}, {col}) is not inside any block")]
    IncompleteCoverage { row: usize, col: usize },

    /// Exhaustive enumeration was refused because the space is too large.
    #[error("enumeration space {size:.3e} exceeds cap {cap:.3e}")]
    SpaceTooLarge { size: f64, cap: f64 },

    /// A training run with an empty epoch budget has nothing to return.
    #[error("no samples drawn")]
    NoSamples,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
