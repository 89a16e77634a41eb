use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid loss parameters: {0}")]
    InvalidLoss(String),

    #[error("unknown loss identifier `{0}`")]
    UnknownLoss(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("sample weights must be finite, non-negative and not all zero")]
    ZeroWeights,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("feature dimension mismatch: model expects {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("could not bracket the weak-hypothesis equation in region {region}")]
    RootNotBracketed { region: usize },

    #[error("loss `{0}` has no closed-form weak hypothesis and cannot drive training")]
    NoHypothesisRule(String),

    #[error("weight rule of `{0}` is not unimodal on the search interval")]
    NotUnimodal(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("probability estimate unavailable: {0}")]
    EstimatorUnavailable(String),

    #[error("training trace did not retain per-iteration misclassification indicators")]
    TraceNotRetained,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
