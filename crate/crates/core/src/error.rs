use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the clustering pipeline and its supporting modules.
#[derive(Debug, Error)]
pub enum SaseError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SaseError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SaseError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn data(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        SaseError::Data {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code for this error class: 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            SaseError::InvalidParameter(_) | SaseError::DimensionMismatch(_) => 1,
            SaseError::Parse { .. }
            | SaseError::Data { .. }
            | SaseError::Io { .. }
            | SaseError::NonFinite(_) => 2,
            SaseError::Degenerate(_) | SaseError::Numerical(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, SaseError>;
