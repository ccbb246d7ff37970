use thiserror::Error;

/// Front-end errors; each maps to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Abort(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Abort(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl From<lieibvp::Error> for CliError {
    fn from(e: lieibvp::Error) -> Self {
        use lieibvp::Error as E;
        match e {
            E::Config(_) | E::Parameter(_) | E::Unsupported(_) => CliError::Config(e.to_string()),
            _ => CliError::Abort(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}
