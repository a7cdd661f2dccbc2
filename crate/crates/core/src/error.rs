use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("insufficient samples: need at least {required}, have {available}")]
    InsufficientSamples { required: usize, available: usize },

    #[error("labels have zero empirical variance")]
    ZeroVariance,

    #[error("least squares is underdetermined: n = {n} must exceed d = {d}")]
    Underdetermined { n: usize, d: usize },

    #[error("covariance estimate is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("labels must be +1/-1 for classification")]
    WrongLabelKind,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("quadrature did not converge at b = {b}: successive estimates differ by {discrepancy:e}")]
    QuadratureFailure { b: f64, discrepancy: f64 },

    #[error("oracle input too large: {0}")]
    TooLarge(String),
}
