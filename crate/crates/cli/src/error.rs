use std::path::PathBuf;

use fringe_info::ErrorKind;
use thiserror::Error;

/// Exit codes. Usage errors reported by the argument parser also exit with 2.
pub mod exit {
    pub const OK: i32 = 0;
    pub const UNEXPECTED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const IO: i32 = 3;
    pub const DOMAIN: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] fringe_info::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(e) => match e.kind() {
                ErrorKind::Config => exit::CONFIG,
                ErrorKind::Io => exit::IO,
                ErrorKind::Domain => exit::DOMAIN,
            },
            CliError::Config(_) => exit::CONFIG,
            CliError::Io { .. } => exit::IO,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
