use thiserror::Error;

/// Errors raised by the analytic models, optimizers and simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarqError {
    #[error("{what} is outside its domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("power policy has no positive power in any round that carries information")]
    DegeneratePolicy,

    #[error("power policy has {got} rounds but the protocol uses {expected}")]
    RoundCount { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, HarqError>;

pub(crate) fn domain<T: crate::Real>(what: &'static str, value: T) -> HarqError {
    HarqError::Domain {
        what,
        value: value.to_f64_lossy(),
    }
}
