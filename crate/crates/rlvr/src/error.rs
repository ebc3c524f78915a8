use thiserror::Error;

pub type Result<T> = std::result::Result<T, RlError>;

#[derive(Debug, Error)]
pub enum RlError {
    #[error("sigma is zero at step {step}; the log-ratio is only defined on stochastic steps")]
    ZeroSigma { step: usize },

    #[error("group of size {0} is too small; advantages need at least 2 samples")]
    GroupTooSmall(usize),

    #[error("importance ratio is not finite (log-ratio {0})")]
    NonFiniteRatio(f64),

    #[error("loss diverged at step {step}: {loss}")]
    DivergedLoss { step: usize, loss: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Core(#[from] verigrid::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
