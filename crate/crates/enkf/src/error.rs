use snowcast_core::{CoreError, Param};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnkfError {
    #[error("an ensemble needs at least 2 members, got {0}")]
    TooFewMembers(usize),

    #[error("layout parameter `{0}` missing from the parameter set")]
    MissingParameter(Param),

    #[error("member {member}: {source}")]
    Member {
        member: usize,
        #[source]
        source: CoreError,
    },

    #[error("analysis called without observations")]
    NoObservations,

    #[error("observation: {0}")]
    Observation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("layout: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = EnkfError> = std::result::Result<T, E>;
