use std::fmt;
use std::path::Path;

use thiserror::Error;

/// Failure of a subcommand, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or invalid arguments (exit code 2).
    #[error("{0}")]
    Usage(String),
    /// A numerical routine failed or a recipe assertion did not hold (exit code 3).
    #[error("{0}")]
    Numerical(String),
    /// Reading or writing files failed (exit code 4).
    #[error("{0}")]
    Io(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn usage(msg: impl fmt::Display) -> Self {
        CliError::Usage(msg.to_string())
    }

    pub fn numerical(msg: impl fmt::Display) -> Self {
        CliError::Numerical(msg.to_string())
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    /// Single-line, machine-readable rendering for stderr.
    pub fn line(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ");
        format!("error kind={} code={} message={msg:?}", self.kind(), self.exit_code())
    }
}

impl From<tinv_core::Error> for CliError {
    fn from(e: tinv_core::Error) -> Self {
        match e {
            tinv_core::Error::InvalidInput(_) | tinv_core::Error::Capability(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}
