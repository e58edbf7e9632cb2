use bridgetail_core::{Error as CoreError, ErrorKind};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    /// A verification suite ran but did not pass.
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl CliError {
    /// 2 for violated hypotheses, 3 for oracle failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Hypothesis => 2,
                ErrorKind::Oracle => 3,
                ErrorKind::Input | ErrorKind::Domain => 1,
            },
            CliError::Verification(_) => 3,
            CliError::Config(_) | CliError::Io(_) | CliError::Unsupported(_) => 1,
        }
    }
}
