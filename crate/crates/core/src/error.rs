//! Error type shared by every stage of the pipeline.

use std::path::PathBuf;

use thiserror::Error;

/// Pipeline error, grouped by the stage that raised it.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters (dimension, level count, config file contents).
    #[error("configuration error: {0}")]
    Config(String),

    /// An API was called with arguments violating its preconditions.
    #[error("usage error: {0}")]
    Usage(String),

    /// Malformed or insufficient input data.
    #[error("ingestion error: {0}")]
    Ingest(String),

    /// Training stream unusable for the requested model.
    #[error("training error: {0}")]
    Training(String),

    #[error("io error at {path}: {source}")]
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

    /// Process exit code: 1 config, 2 data, 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Ingest(_) | Error::Io { .. } => 2,
            Error::Usage(_) | Error::Training(_) => 3,
        }
    }
}
