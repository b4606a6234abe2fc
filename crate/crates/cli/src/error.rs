use teamdp::TeamError;
use thiserror::Error;

/// Failures of a command, each mapped to a stable exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or malformed input; exit 2.
    #[error("{0}")]
    Input(String),
    /// The input is well formed but violates the model; exit 1.
    #[error("{0}")]
    Domain(String),
    /// A size cap was hit; exit 3.
    #[error("{0}")]
    Cap(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Input(_) => 2,
            CliError::Cap(_) => 3,
        }
    }
}

impl From<TeamError> for CliError {
    fn from(e: TeamError) -> Self {
        match e {
            TeamError::CapExceeded { .. } => CliError::Cap(e.to_string()),
            other => CliError::Domain(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
