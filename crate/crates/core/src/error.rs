use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{what} is degenerate (splitting {splitting:.3e})")]
    Degenerate { what: String, splitting: f64 },
    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("precondition not met: {0}")]
    Precondition(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
