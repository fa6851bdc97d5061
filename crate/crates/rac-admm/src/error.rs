//! Crate-wide error type.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// Text input could not be parsed; `line` is 1-based, 0 when unknown.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Shapes of two related objects disagree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A matrix required to be positive definite failed its pivot test.
    /// For block sub-problems this signals that the sampled block violates
    /// the per-block positive-definiteness assumption.
    #[error("matrix not positive definite{}", fmt_block(.block))]
    NotPositiveDefinite { block: Option<usize> },

    /// A factorization hit a negligible pivot on an indefinite system.
    #[error("singular system: {0}")]
    Singular(String),

    /// Input violates an operation's contract.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Exact enumeration was requested beyond the configured cap.
    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),

    /// Exact integer arithmetic overflowed its 128-bit carrier.
    #[error("count overflows 128-bit arithmetic: {0}")]
    Overflow(String),

    /// The operation does not support this problem shape.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An iterative kernel failed to converge within its iteration cap.
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn fmt_block(block: &Option<usize>) -> String {
    match block {
        Some(b) => format!(" (block {b})"),
        None => String::new(),
    }
}
