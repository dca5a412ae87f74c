use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("mean sojourn time undefined for log-logistic shape rho = {rho} (requires rho > 1)")]
    MeanUndefined { rho: f64 },

    #[error("screen index {k} out of range 1..={screens}")]
    ScreenIndex { k: usize, screens: usize },

    #[error("inconsistent outcome records: {0}")]
    InconsistentOutcomes(String),

    #[error("invalid counts table: {0}")]
    InvalidCounts(String),

    #[error("{path}: row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: u64,
        message: String,
    },

    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("estimation did not converge: {0}")]
    NonConvergence(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
