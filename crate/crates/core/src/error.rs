use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown field `{0}`")]
    UnknownField(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid parameters: {0}")]
    Parameters(String),

    #[error("non-finite {field} at HRU {hru} on {date}")]
    NonFinite {
        hru: usize,
        field: &'static str,
        date: chrono::NaiveDate,
    },
}

impl CoreError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CoreError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
