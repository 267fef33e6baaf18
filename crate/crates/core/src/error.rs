use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-positive mass m(x) = {mass} at x = {x}")]
    Domain { x: f64, mass: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension error: {0}")]
    Size(String),

    #[error("level {n} lies outside the trusted block (dim {dim}, guard {guard})")]
    Truncation { n: usize, dim: usize, guard: usize },

    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("level {n} not converged under truncation (estimate {estimate:e})")]
    NotConverged { n: usize, estimate: f64 },

    #[error("polynomial fit failed: {0}")]
    Fit(String),

    #[error("non-finite state at step {step}")]
    Step { step: usize },

    #[error("{0}")]
    NotFound(String),
}
