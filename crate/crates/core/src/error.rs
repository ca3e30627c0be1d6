use thiserror::Error;

/// Errors raised by the numerical routines and the bandit drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("information matrix is singular (smallest pivot {pivot:e})")]
    SingularInformation { pivot: f64 },

    #[error("evaluation vector {index} lies outside the span of the sample vectors (residual {residual:e})")]
    SpanViolation { index: usize, residual: f64 },

    #[error("insufficient budget: {needed} samples needed, {available} available ({context})")]
    InsufficientBudget {
        needed: usize,
        available: usize,
        context: &'static str,
    },

    #[error("lifted arms span only {rank} of {needed} dimensions")]
    RankDeficientLift { rank: usize, needed: usize },

    #[error("degenerate gap: {0}")]
    DegenerateGap(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("arm index {index} out of range (instance has {count} arms)")]
    InvalidArm { index: usize, count: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
