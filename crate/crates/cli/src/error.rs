use thiserror::Error;

use crate::rdk::RdkError;

/// Process exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_INVARIANT: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{origin}:{line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Rdk { path: String, source: RdkError },
    #[error("{0}")]
    Invariant(String),
}

impl CliError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn rdk(path: impl Into<String>, source: RdkError) -> Self {
        match source {
            RdkError::Io(e) => CliError::io(path, e),
            other => CliError::Rdk {
                path: path.into(),
                source: other,
            },
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Rdk { .. } => EXIT_IO,
            CliError::Invariant(_) => EXIT_INVARIANT,
        }
    }
}
