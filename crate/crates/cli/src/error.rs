use asianrec::PricingError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("ConfigError: {0}")]
    Config(String),

    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Pricing(#[from] PricingError),
}

impl CliError {
    /// 2 for bad input, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Pricing(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}
