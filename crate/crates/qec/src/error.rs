use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QecError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("noise model: {0}")]
    Model(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, QecError>;
