use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("p must lie in (0,1], got {0}")]
    InvalidExponent(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("weights violate sum t_i^p = 1 (sum = {sum})")]
    WeightValidation { sum: f64 },

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("gauge bracket grew past 2^60; the body is not bounded")]
    UnboundedBody,

    #[error("target set is empty")]
    EmptyTarget,

    #[error("set unbounded in d_p metric: {0}")]
    UnboundedSet(String),

    #[error("operator coefficients are unbounded: {0}")]
    UnboundedOperator(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("precondition violated: {reason}")]
    Precondition { reason: String, witness: Vec<f64> },
}
