use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or out-of-range model parameters.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge on [{a}, {b}]: error estimate {estimate:e}")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("no unique steady state: {0}")]
    NoSteadyState(String),

    #[error("propagation failed: {0}")]
    Propagation(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    /// Two routes to the same quantity disagree beyond tolerance.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    /// Fock-space truncation too small for the state.
    #[error("cutoff too small: {0}")]
    Cutoff(String),

    #[error("non-physical state: {0}")]
    NonPhysical(String),

    #[error("linear algebra: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    /// The linked BLAS/LAPACK produced wrong results on a self-check.
    #[error("linear algebra backend: {0}")]
    Backend(String),
}

pub type Result<T> = std::result::Result<T, Error>;
