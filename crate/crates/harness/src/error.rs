use std::path::PathBuf;

use snowcast_core::CoreError;
use snowcast_enkf::EnkfError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{path}, row {row}: {message}")]
    Row { path: PathBuf, row: u64, message: String },

    #[error("{0}")]
    Invalid(String),

    #[error("series length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("{mode} on {date}: {source}")]
    Run {
        mode: String,
        date: chrono::NaiveDate,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error(transparent)]
    Enkf(#[from] EnkfError),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}
