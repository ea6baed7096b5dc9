use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("malformed matrix document: {0}")]
    Format(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("eigensolver did not converge")]
    NoConvergence,
}

pub type Result<T> = std::result::Result<T, CoreError>;
