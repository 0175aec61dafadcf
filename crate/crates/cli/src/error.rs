use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("no key: {0}")]
    NoKey(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] mdiqkd_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NoKey(_) => 3,
            CliError::Validation(_) => 4,
            CliError::Core(mdiqkd_core::Error::NoKey(_)) => 3,
            CliError::Core(mdiqkd_core::Error::Domain(_)) => 2,
            _ => 1,
        }
    }
}
