use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("series too short: need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("degenerate series: {0}")]
    Degenerate(String),

    #[error("empty series")]
    Empty,

    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),

    #[error("need at least {needed} lags with positive autocorrelation, got {got}")]
    InsufficientPositive { needed: usize, got: usize },

    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("no valid rows in {}", .0.display())]
    NoValidRows(PathBuf),

    #[error("duplicate date {0}")]
    DuplicateDate(String),

    #[error("missing column {0:?}")]
    MissingColumn(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("no critical-noise entry for mean degree {0}")]
    MissingQc(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by bad user input rather than a failed computation.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::Config(_) | Error::MissingQc(_)
        )
    }
}
