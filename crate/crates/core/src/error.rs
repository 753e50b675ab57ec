use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("value {value} lies outside the domain {domain}")]
    Domain { value: f64, domain: String },

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("unsupported: {0}")]
    Capability(String),

    #[error("scaling factor {0:e} is numerically zero; the transformed step is undefined")]
    SingularScaling(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn eval(msg: impl Into<String>) -> Self {
        Error::Evaluation(msg.into())
    }
}
