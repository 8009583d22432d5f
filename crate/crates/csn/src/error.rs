//! Crate-wide error type.

use thiserror::Error;

use crate::train::FitHistory;

#[derive(Debug, Error)]
pub enum CsnError {
    /// Invalid configuration, including incompatible shapes (the message names both).
    #[error("configuration error: {0}")]
    Config(String),

    /// Bad input data (non-finite values, unparseable rows, missing columns).
    #[error("data error: {0}")]
    Data(String),

    /// Unknown simulation scenario name.
    #[error("unknown scenario `{name}`; valid names: {valid}")]
    UnknownScenario { name: String, valid: String },

    /// Metric cannot be computed on the given inputs (e.g. AUC with one class).
    #[error("undefined metric: {0}")]
    MetricUndefined(String),

    /// A gradient entry became non-finite during optimization.
    #[error("non-finite gradient at parameter index {index}")]
    NonFiniteGradient { index: usize },

    /// Training aborted; the history up to the failure is preserved.
    #[error("fit aborted at epoch {epoch}: {reason}")]
    FitAborted {
        reason: String,
        epoch: usize,
        history: Box<FitHistory>,
    },

    /// Model file is malformed or truncated.
    #[error("model file error: {0}")]
    ModelFormat(String),

    /// Model file was written by an unsupported format version.
    #[error("unsupported model file version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CsnError>;
