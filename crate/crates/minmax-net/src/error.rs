//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("no measurements")]
    EmptyDataset,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("constraint conflict: LP infeasible after {halvings} step halvings")]
    ConstraintConflict { halvings: u32 },

    #[error("metric is ill-conditioned (condition {condition:.3e}); switch metric")]
    IllConditionedMetric { condition: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
