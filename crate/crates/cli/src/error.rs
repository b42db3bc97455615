use harq_power::HarqError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] HarqError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for configuration problems, 3 for infeasible problems, 4 for
    /// numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Model(HarqError::Infeasible(_)) => 3,
            CliError::Model(HarqError::Numeric(_)) => 4,
            _ => 2,
        }
    }
}
