//! Error types shared across the toolkit.

use thiserror::Error;

/// Unified error type for every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor/matrix shape mismatch. The message always names both shapes.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// An operation's precondition was violated.
    #[error("precondition error: {0}")]
    Precondition(String),

    /// A value left the mathematical domain of an operation (log of a
    /// non-positive number, NaN/Inf produced by a primitive, ...).
    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    /// Index out of range.
    #[error("index error: {0}")]
    Index(String),

    /// Invalid configuration (bad hyperparameters, single-class training
    /// set, zero-denominator ratio, unknown config keys, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed input data (CSV parse failures, length mismatches,
    /// non-binary labels, empty inputs).
    #[error("input error: {0}")]
    Input(String),

    /// A metric's denominator is zero; the message names the metric/mode.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: {message}")]
    TrainingDivergence { epoch: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
