use stochdyn::Error;
use thiserror::Error;

/// Command failures, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or malformed input (exit 2).
    #[error("{0}")]
    Parse(String),
    /// Input that parses but violates a system invariant (exit 3).
    #[error("{0}")]
    Invariant(String),
    /// The starting point lies in the exceptional set (exit 4).
    #[error("ExceptionalStart: the starting point lies in the exceptional set")]
    ExceptionalStart,
    /// Any other failure during a computation (exit 1).
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::ExceptionalStart => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::ExceptionalStart => CliError::ExceptionalStart,
            Error::InvalidArgument(_) | Error::ZeroPoint => CliError::Parse(e.to_string()),
            Error::DegreeTooLow(_)
            | Error::DegenerateMap
            | Error::CommonFactor
            | Error::DegreeMismatch { .. }
            | Error::InvalidSystem(_) => CliError::Invariant(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("I/O error: {e}"))
    }
}
