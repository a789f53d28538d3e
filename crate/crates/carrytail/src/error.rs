use std::path::PathBuf;

use carrytail_core::Error as CoreError;

/// Failures surfaced by the command-line front end.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Format { path: path.into(), message: message.into() }
    }

    /// 2 for I/O, 3 for invalid input or parameters, 4 for numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 2,
            CliError::Format { .. } | CliError::Config(_) => 3,
            CliError::Core(e) => match e {
                CoreError::Fit(_) | CoreError::Evaluation(_) | CoreError::Regression(_) => 4,
                _ => 3,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
