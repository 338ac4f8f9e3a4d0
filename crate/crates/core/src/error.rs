use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// The argument lies outside the range of the kernel's psi, so its inverse is undefined.
    #[error("{value} is outside the range of psi for kernel {kernel}")]
    OutOfRange { kernel: String, value: f64 },

    /// A componentwise map could not be formed at `index`.
    #[error("component {index}: {reason}")]
    Component { index: usize, reason: String },

    /// F could not be evaluated (e.g. a demand function at zero total output).
    #[error("evaluation of F failed{}: {reason}", index.map(|i| format!(" at component {i}")).unwrap_or_default())]
    Evaluation { index: Option<usize>, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn eval_at(index: usize, reason: impl Into<String>) -> Self {
        Error::Evaluation {
            index: Some(index),
            reason: reason.into(),
        }
    }
}
