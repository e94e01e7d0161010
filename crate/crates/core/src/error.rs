use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an operation precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid solver configuration: {0}")]
    Config(String),

    /// An instance or solution failed validation; `path` names the offending field.
    #[error("invalid instance at `{path}`: {reason}")]
    Invalid { path: String, reason: String },

    #[error("failed to parse {file}: {path}: {source}")]
    Parse {
        file: PathBuf,
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("i/o error on {file}: {source}")]
    Io {
        file: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn invalid(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
