use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, KoopmanError>;

#[derive(Debug, Error)]
pub enum KoopmanError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Symmetric positive-definite factorization broke down.
    #[error("ill-conditioned system: pivot {pivot:e} at index {index} is not positive")]
    Conditioning { pivot: f64, index: usize },

    #[error("ill-conditioned system: feature matrix has rank {rank}, {required} required")]
    RankDeficient { rank: usize, required: usize },

    #[error("observable `{member}` returned non-finite value {value} at {state:?}")]
    Evaluation {
        member: String,
        state: Vec<f64>,
        value: f64,
    },

    #[error("trajectory diverged at step {step}")]
    Divergence { step: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl KoopmanError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        KoopmanError::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        KoopmanError::Io {
            path: path.into(),
            source,
        }
    }
}
