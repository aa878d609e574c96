use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RfpError {
    /// An argument lies outside the domain of the function it was passed to.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or invalid configuration (deployment, preset, CLI flags).
    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty aggregate: no unmasked pixel with distance in [{lo:.3}, {hi:.3}] m")]
    EmptyAggregate { lo: f64, hi: f64 },

    #[error("grid of {pixels} pixels exceeds the cap of {cap} pixels")]
    GridTooLarge { pixels: u64, cap: u64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl RfpError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RfpError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, RfpError>;
