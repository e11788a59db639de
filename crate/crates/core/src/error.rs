use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid run parameters (schedule counts, horizons, thresholds, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Schedules disagree with the pool they were built from.
    #[error("integrity error: {0}")]
    Integrity(String),

    /// Sample variance needs at least two schedules.
    #[error("variance is undefined for {0} schedule(s); at least 2 are required")]
    DegenerateVariance(usize),

    /// Malformed input data. `line` is 1-based and counts the header row.
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: u64,
        message: String,
    },

    #[error("missing column `{column}` in {source_name}")]
    MissingColumn { source_name: String, column: String },

    #[error("i/o error on {path}: {source}")]
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
    pub(crate) fn parse(source_name: impl Into<String>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
