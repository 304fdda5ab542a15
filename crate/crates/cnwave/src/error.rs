use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("non-finite value at step {step}")]
    NonFinite { step: usize },
    #[error("degenerate phase: correlation modulus {0:e} too small")]
    DegeneratePhase(f64),
    #[error("mass mismatch: field has {actual}, expected {expected}")]
    MassMismatch { actual: f64, expected: f64 },
    #[error("degenerate constraint set")]
    DegenerateConstraints,
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
