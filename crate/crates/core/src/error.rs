use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("argument {t} outside [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("incompatible domains: h = {0} vs h = {1}")]
    IncompatibleDomain(f64, f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("function is not in U_b for b = {b} (max |phi'| = {max_slope})")]
    NotInUb { b: f64, max_slope: f64 },

    #[error("function is not in X_0 (phi'(0) = {0})")]
    NotInX0(f64),

    #[error("fixed-point iterate escaped (-h, 0): r = {0}")]
    IterateEscaped(f64),

    #[error("not in the chart image: {0}")]
    NotInImage(String),

    #[error("no convergence after {iterations} iterations (last step {last_step:e})")]
    NoConvergence { iterations: usize, last_step: f64 },

    #[error("manifold residual too large: {0:e}")]
    ResidualTooLarge(f64),

    #[error("sign condition failed: z(0) = {z0}, z(1) = {z1}")]
    SignConditionFailed { z0: f64, z1: f64 },

    #[error("parameter search failed: {0}")]
    ParameterSearchFailed(String),

    #[error("kernel search failed: {0}")]
    KernelSearchFailed(String),

    #[error("step size too large at t = {t}: {reason}")]
    StepSizeTooLarge { t: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
