use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mode set: {0}")]
    InvalidModeSet(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension {dim} exceeds the full-matrix capacity of {cap}")]
    Capacity { dim: usize, cap: usize },

    #[error("quadrature under-resolved: self-overlap of {mode} is {value:.3e} away from 1")]
    Quadrature { mode: String, value: f64 },

    #[error("ingestion error: {0}")]
    Ingestion(String),

    #[error("missing pair ({0}, {1}) in visibility table")]
    MissingPair(usize, usize),

    #[error("data integrity failure: {0}")]
    Integrity(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
