use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A file or directory could not be turned into images.
    #[error("cannot ingest {}: {reason}", path.display())]
    Ingestion { path: PathBuf, reason: String },

    /// A class has too few samples for the requested first-n split.
    #[error(
        "cannot split class {class}: {count} samples, {train_per_class} requested for training"
    )]
    Split {
        class: String,
        count: usize,
        train_per_class: usize,
    },

    /// Inputs with incompatible shapes or values outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The regularized system could not be factorized, even after jitter.
    #[error(
        "matrix of order {n} is not positive definite (trace {trace:e}, diagonal range [{min_diag:e}, {max_diag:e}], jitter {jitter:e})"
    )]
    NotPositiveDefinite {
        n: usize,
        trace: f64,
        min_diag: f64,
        max_diag: f64,
        jitter: f64,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn ingestion(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Ingestion {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by inputs rather than data or numerics.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::InvalidParameter(_))
    }
}
