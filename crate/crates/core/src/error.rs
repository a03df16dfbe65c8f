//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A cell could not be parsed as a number. Row and column are 1-based
    /// file coordinates (the header line, when present, counts as row 1).
    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    /// Input data violates an invariant (negative time, status outside {0,1},
    /// ragged rows, no events, ...).
    #[error("invalid data: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// The quadratic system cannot support the requested operation
    /// (e.g. every diagonal weight is zero).
    #[error("degenerate system: {0}")]
    Degenerate(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
