use std::path::{Path, PathBuf};

use thiserror::Error;

/// Exit code for malformed input or a violated contract.
pub const EXIT_INPUT: i32 = 2;
/// Exit code for numeric failures and degenerate geometry.
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    /// A file is missing, unreadable or has a bad field.
    #[error("{}: {field}: {message}", path.display())]
    Input {
        path: PathBuf,
        field: String,
        message: String,
    },

    /// A library operation failed while processing `path`.
    #[error("{}: {field}: {source}", path.display())]
    Core {
        path: PathBuf,
        field: String,
        #[source]
        source: girder_core::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn input(path: &Path, field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Input {
            path: path.to_path_buf(),
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn core(path: &Path, field: impl Into<String>, source: girder_core::Error) -> Self {
        CliError::Core {
            path: path.to_path_buf(),
            field: field.into(),
            source,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core { source, .. } if source.is_numeric() => EXIT_NUMERIC,
            _ => EXIT_INPUT,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attaches file and field context to a library result.
pub(crate) trait Context<T> {
    fn context(self, path: &Path, field: &str) -> CliResult<T>;
}

impl<T> Context<T> for girder_core::Result<T> {
    fn context(self, path: &Path, field: &str) -> CliResult<T> {
        self.map_err(|e| CliError::core(path, field, e))
    }
}
