use thiserror::Error;

/// Errors raised by the solvers, the network simulator and the data layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("atom index {index} out of range (n = {count})")]
    AtomOutOfRange { index: usize, count: usize },

    #[error("atom {0} is not available at this node")]
    AtomUnavailable(usize),

    #[error("node {node} out of range (N = {count})")]
    NodeOutOfRange { node: usize, count: usize },

    #[error("empty gradient: the linear minimization oracle needs at least one atom")]
    EmptyGradient,

    #[error("objective kind mismatch: {0}")]
    KindMismatch(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid atom matrix: {0}")]
    InvalidMatrix(String),

    #[error("non-finite objective value at iteration {iteration}: {value}")]
    NonFinite { iteration: usize, value: f64 },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
