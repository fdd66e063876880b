use thiserror::Error;

/// Errors surfaced by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite entries in {0}")]
    NonFinite(&'static str),

    #[error("negative curvature reached the tridiagonal builder (alpha = {0})")]
    NegativeCurvature(f64),

    #[error("invalid CG coefficient: {0}")]
    InvalidCoefficient(String),

    #[error("degenerate spectrum: Ritz value is zero")]
    DegenerateSpectrum,

    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("backtracking exhausted after {0} halvings")]
    Stagnation(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
