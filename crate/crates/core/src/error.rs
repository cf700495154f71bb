use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = PodError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PodError {
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("dataset has no rows")]
    EmptyDataset,

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error at {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl PodError {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        PodError::ContractViolation(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PodError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        PodError::Csv {
            path: path.into(),
            source,
        }
    }
}
