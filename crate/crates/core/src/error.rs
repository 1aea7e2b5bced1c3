use thiserror::Error;

/// Failures raised by the simulation library.
///
/// Physics-level checks (norm drift, trace drift, Fock truncation) are
/// reported as errors rather than silently producing inaccurate data.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("argument out of supported range: {0}")]
    Range(String),

    #[error("wrong modulation scheme: {0}")]
    Scheme(String),

    #[error("no squeezing maximum: {0}")]
    NoMaximum(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("accuracy failure: {0}")]
    Accuracy(String),

    #[error("truncation failure: {0}")]
    Truncation(String),
}

impl Error {
    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDimension(_) => "invalid-dimension",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::Range(_) => "range",
            Error::Scheme(_) => "scheme",
            Error::NoMaximum(_) => "no-maximum",
            Error::Domain(_) => "domain",
            Error::InvalidState(_) => "invalid-state",
            Error::InvalidParams(_) => "invalid-params",
            Error::Accuracy(_) => "accuracy",
            Error::Truncation(_) => "truncation",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
