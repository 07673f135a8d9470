use nalgebra::DMatrix;
use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}x{expected}, got {rows}x{cols}")]
    Dimension {
        expected: usize,
        rows: usize,
        cols: usize,
    },

    #[error("index {index} out of range (n = {n})")]
    Index { index: usize, n: usize },

    #[error("eigendecomposition failed on {dim}x{dim} matrix (max |entry| {max_abs:e}, non-finite entries: {non_finite})")]
    Eigen {
        dim: usize,
        max_abs: f64,
        non_finite: usize,
    },

    #[error("outside domain: {0}")]
    Domain(String),

    #[error("projection did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        last: Box<DMatrix<f64>>,
    },

    #[error("problem too large: {what} = {size} exceeds cap {cap}")]
    Size {
        what: &'static str,
        size: u128,
        cap: u128,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("engine state: {0}")]
    State(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
