//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by metrics, solver, baseline, and harness operations.
#[derive(Debug, Error)]
pub enum Error {
    /// The sparsity ratio is undefined for the all-zero vector (0/0).
    #[error("sparsity ratio is undefined for an all-zero vector")]
    AllZeroSignal,

    /// The log-surrogate cost and its derivatives are undefined when any
    /// entry is exactly zero.
    #[error("surrogate cost is undefined at zero entry (index {index})")]
    UndefinedAtZero { index: usize },

    /// Dimension mismatch between operands.
    #[error("shape mismatch: {context} (expected {expected}, got {actual})")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The top-rho window of the sorted signal has zero norm, so the
    /// hypersphere scaling is undefined.
    #[error("degenerate input: selected support has zero norm")]
    DegenerateSupport,

    /// A computation produced a non-finite intermediate value.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Failure inside the dense linear algebra backend.
    #[error("linear algebra backend: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
