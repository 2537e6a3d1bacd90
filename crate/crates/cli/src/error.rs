use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] ksearch_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("{0}")]
    Format(String),

    #[error("{0}")]
    Mismatch(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// 1 check failed, 2 invalid input, 3 numerical failure, 4 I/O.
    pub fn exit_code(&self) -> ExitCode {
        use ksearch_core::Error as E;
        let code = match self {
            CliError::Mismatch(_) => 1,
            CliError::Usage(_) | CliError::Format(_) => 2,
            CliError::Core(
                E::ConvergenceFailure(_) | E::WindowTooSmall { .. } | E::Diverges { .. },
            ) => 3,
            CliError::Core(_) => 2,
            CliError::Io { .. } => 4,
        };
        ExitCode::from(code)
    }
}
