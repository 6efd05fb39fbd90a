use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("chaos game diverged at iteration {iteration}: |coordinate| = {magnitude:e}")]
    Divergence { iteration: usize, magnitude: f64 },

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("point cloud has zero extent on every axis")]
    DegenerateExtent,

    #[error(
        "category search exhausted after {attempts} candidates: accepted {accepted} of {target} \
         (acceptance rate {rate:.4})"
    )]
    SearchExhausted {
        attempts: u64,
        accepted: usize,
        target: usize,
        rate: f64,
    },

    #[error("cannot keep {keep} categories out of {available}")]
    InsufficientCategories { keep: usize, available: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("pruning scores are incomplete: {0}")]
    IncompleteScores(String),

    #[error("malformed category file line {line}: {reason}")]
    CategoryFormat { line: usize, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("png encoding failed: {0}")]
    Png(String),

    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
