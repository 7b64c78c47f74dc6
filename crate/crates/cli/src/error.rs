use dephasing_core::ErrorClass;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numerical precondition failed: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<dephasing_core::Error> for CliError {
    fn from(e: dephasing_core::Error) -> Self {
        match e.class() {
            ErrorClass::Validation => CliError::Validation(e.to_string()),
            ErrorClass::Numerical => CliError::Numerical(e.to_string()),
        }
    }
}
