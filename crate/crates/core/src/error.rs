use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the synthesis, sampling, and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown architecture `{0}`")]
    UnknownArchitecture(String),

    #[error("invalid architecture spec: {0}")]
    InvalidArchitecture(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("wav error on {path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Broad category, used by front ends to pick exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::UnknownArchitecture(_)
            | Error::InvalidArchitecture(_)
            | Error::InvalidArgument(_)
            | Error::ShapeMismatch(_)
            | Error::Json(_) => ErrorKind::InvalidInput,
            Error::Numerical(_) => ErrorKind::Numerical,
            Error::Io { .. } | Error::Wav { .. } | Error::Format { .. } => ErrorKind::Io,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    InvalidInput,
    Io,
    Numerical,
}
