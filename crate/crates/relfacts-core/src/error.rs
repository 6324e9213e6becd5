//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by construction, validation, and evaluation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A value failed a structural invariant (non-unitary matrix, incomplete
    /// PVM, non-normalized state, bad label, ...).
    #[error("validation: {0}")]
    Validation(String),

    /// A system label was not found in the registry.
    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    /// Operand shapes are incompatible.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },

    /// A composite dimension exceeded the configured cap.
    #[error("capacity: requested dimension {requested} exceeds cap {cap}{context}")]
    Capacity {
        requested: usize,
        cap: usize,
        context: String,
    },

    /// A Lüders update hit a branch of (near-)zero probability.
    #[error("zero-probability branch (p = {probability:.3e})")]
    ZeroBranch { probability: f64 },

    /// A conditional probability was requested against a zero-probability event.
    #[error("conditioning on a zero-probability event")]
    UndefinedConditional,

    /// An iterative search cannot make progress (e.g. non-decreasing ε).
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// A numerical routine failed to reach its tolerance.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn capacity(requested: usize, cap: usize, context: impl Into<String>) -> Self {
        let context = context.into();
        let context = if context.is_empty() {
            context
        } else {
            format!(" ({context})")
        };
        Error::Capacity {
            requested,
            cap,
            context,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
