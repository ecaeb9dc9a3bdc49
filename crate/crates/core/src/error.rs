use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of the function.
    #[error("{name} = {value} is outside the domain ({reason})")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("port ({row}, {col}) is outside a {rows}x{cols} grid")]
    PortOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("port index {index} is outside 1..={ports}")]
    IndexOutOfRange { index: usize, ports: usize },

    #[error("invalid port grid: {0}")]
    InvalidGrid(String),

    #[error("invalid system configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid correlation matrix: {0}")]
    InvalidCorrelation(String),

    /// Cholesky pivot collapsed; the matrix needs more regularization.
    #[error("correlation matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid integration settings: {0}")]
    InvalidIntegration(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::Domain {
        name,
        value,
        reason,
    }
}
