use std::path::PathBuf;

use thiserror::Error;

/// Errors produced across ingestion, calibration and reporting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: {message}")]
    Validation { line: u64, message: String },

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("model evaluated outside its domain: t = {t} is not before tc = {tc}")]
    Domain { t: f64, tc: f64 },

    #[error("singular design matrix")]
    Singular,

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
