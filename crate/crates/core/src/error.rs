use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum ArmlError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure at iteration {iteration}: {message}")]
    Numeric { iteration: usize, message: String },

    #[error("unsupported: {0}")]
    Capability(String),

    #[error("invalid config field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("failed to parse {path}: {message} (line {line}, column {column})")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {message}")]
    Csv { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, ArmlError>;

impl ArmlError {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        ArmlError::InvalidArgument(msg.into())
    }

    pub(crate) fn numeric(iteration: usize, msg: impl Into<String>) -> Self {
        ArmlError::Numeric {
            iteration,
            message: msg.into(),
        }
    }

    pub(crate) fn validation(field: impl Into<String>, msg: impl Into<String>) -> Self {
        ArmlError::Validation {
            field: field.into(),
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ArmlError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures that the CLI reports with the numeric-abort exit code.
    pub fn is_numeric(&self) -> bool {
        matches!(self, ArmlError::Numeric { .. })
    }
}
