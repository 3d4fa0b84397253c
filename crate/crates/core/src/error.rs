use thiserror::Error;

use crate::process::CandidateCounts;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Partial progress reported when a replicate exceeds its guards.
#[derive(Debug, Clone, PartialEq)]
pub struct GuardExceeded {
    pub reason: String,
    pub time: f64,
    pub generated: u64,
    pub counts: Vec<CandidateCounts>,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported dimension {0}, expected 1, 2 or 3")]
    UnsupportedDimension(usize),

    #[error("unsupported method: {0}")]
    UnsupportedMethod(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("type index {index} out of range (target type is {max})")]
    TypeOutOfRange { index: usize, max: usize },

    #[error("resource limit exceeded: {} after {} candidates at t = {}", .0.reason, .0.generated, .0.time)]
    ResourceLimit(Box<GuardExceeded>),

    #[error("degenerate law: every rate is infinite, all mass sits at 0")]
    DegenerateLaw,

    #[error("regime needs the limits c_i = lim mu_i/mu_1 but none were supplied")]
    MissingLimits,

    #[error("no limit law available for regime {0}")]
    NoLawAvailable(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("quadrature did not reach tolerance on [{lo}, {hi}] (error estimate {error:e})")]
    Quadrature { lo: f64, hi: f64, error: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
