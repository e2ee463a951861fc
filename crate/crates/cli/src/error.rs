//! Error type of the command-line runner and its exit codes.

use std::path::PathBuf;

/// Errors raised while running a command.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Error from the library.
    #[error(transparent)]
    Core(#[from] qbell_core::Error),
    /// File system failure.
    #[error("{path}: {source}")]
    Io {
        /// Offending path.
        path: PathBuf,
        /// Underlying error.
        source: std::io::Error,
    },
    /// A file does not match its schema.
    #[error("{path}: {message}")]
    Schema {
        /// Offending path.
        path: PathBuf,
        /// Parser message, naming the offending field.
        message: String,
    },
    /// An invalid combination of options.
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// Process exit code: 2 for invalid promise parameters, 3 for feasibility caps, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use qbell_core::Error as E;
        match self {
            CliError::Core(E::ParamOutOfRange(_) | E::GammaNonPositive(_) | E::AlphaNonPositive(_)) => 2,
            CliError::Core(E::CapExceeded(_)) => 3,
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// Result alias for the runner.
pub type Result<T> = std::result::Result<T, CliError>;
