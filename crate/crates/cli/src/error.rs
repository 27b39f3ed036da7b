use std::process::ExitCode;

use thiserror::Error;

/// Command failures, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flag values or combinations (exit 2).
    #[error("{0}")]
    Usage(String),
    /// Unreadable, malformed or inconsistent input files (exit 3).
    #[error("{0}")]
    Data(String),
    /// The solver could not produce a fit (exit 4).
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        })
    }

    /// Prefixes the message with `context`, keeping the category.
    pub fn context(self, context: impl std::fmt::Display) -> Self {
        match self {
            CliError::Usage(m) => CliError::Usage(format!("{context}: {m}")),
            CliError::Data(m) => CliError::Data(format!("{context}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{context}: {m}")),
        }
    }
}

impl From<pcrrr::Error> for CliError {
    fn from(e: pcrrr::Error) -> Self {
        use pcrrr::Error::*;
        let msg = e.to_string();
        match e {
            RankTooLarge { .. } | InvalidHyperparameter(_) | InvalidConfig(_) | BadFoldCount { .. } => {
                CliError::Usage(msg)
            }
            DimensionMismatch(_) | NonFinite { .. } | BadPartition(_) | AllZeroBlock { .. }
            | EmptyInput(_) => CliError::Data(msg),
            DegenerateColumn { .. } | ZeroCrossProduct | NonDecreasingObjective { .. } => {
                CliError::Numerical(msg)
            }
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
