use kfks_core::KineticError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(KineticError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<KineticError> for CliError {
    fn from(e: KineticError) -> Self {
        match e {
            KineticError::InvalidInput(msg) => CliError::Usage(msg),
            other => CliError::Numerical(other),
        }
    }
}
