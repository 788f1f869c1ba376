use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] canard_lab::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),

    #[error("system failed validation: {0}")]
    Invalid(String),
}

impl CliError {
    /// 1 for input or validation problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        use canard_lab::Error as E;
        match self {
            CliError::Usage(_) | CliError::Invalid(_) => 1,
            CliError::Core(E::Config(_) | E::Rejected(_) | E::Expr(_)) => 1,
            CliError::Core(_) | CliError::Io { .. } => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
