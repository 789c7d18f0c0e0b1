use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("matrix is not antisymmetric: max |x + xᵀ| = {0:e}")]
    NotAntisymmetric(f64),
    #[error("matrix is singular (relative determinant {0:e})")]
    Singular(f64),
    #[error("eigenvalue pairing failed: relative mismatch {0:e}")]
    Pairing(f64),
    #[error("quadrature did not converge: estimated error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },
    #[error("parameter {0} is outside the convergence domain")]
    ConvergenceDomain(String),
    #[error("analytic-only parameter: {0}")]
    AnalyticOnly(String),
    #[error("ill-conditioned system: condition number {0:e}")]
    IllConditioned(f64),
    #[error("contour error: {0}")]
    Contour(String),
    #[error("insufficient smoothness: need {needed} derivatives, weight provides {available}")]
    Smoothness { needed: usize, available: usize },
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error at {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
