use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    /// Inputs parse but are unusable (missing ids, zero-norm vectors, ...).
    #[error("{0}")]
    Input(String),

    /// A file does not match its expected format.
    #[error("{0}")]
    Schema(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Input(_) => 1,
            CliError::Schema(_) => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(path: &std::path::Path, msg: impl std::fmt::Display) -> Self {
        CliError::Schema(format!("{}: {msg}", path.display()))
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
