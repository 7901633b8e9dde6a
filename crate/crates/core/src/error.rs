use thiserror::Error;

/// Errors raised by the operator algebra.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("operator is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("ill-conditioned {what}: condition number {condition:e}")]
    IllConditioned { what: &'static str, condition: f64 },
    #[error("matrix is not positive definite: smallest eigenvalue {0:e}")]
    NotPositiveDefinite(f64),
    #[error("dimension budget exceeded: d = {0} > {1}")]
    DimensionBudget(usize, usize),
    #[error("quadrature did not converge (estimated error {0:e})")]
    QuadratureNonConvergence(f64),
    #[error("dynamical map is singular at t = {time} (smallest singular value {sigma_min:e})")]
    SingularMap { time: f64, sigma_min: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
