//! Error type shared by the tensor engine.

use thiserror::Error;

/// Errors produced by tensor construction, ops, and the backward pass.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Shape or size mismatch; `details` names the offending shapes.
    #[error("dimension error in `{op}`: {details}")]
    Dimension { op: &'static str, details: String },

    /// Non-finite values or other numeric contract violations.
    #[error("numeric error in `{op}`: {details}")]
    Numeric { op: &'static str, details: String },

    /// API misuse that is not a shape problem (duplicate names, bad args).
    #[error("usage error: {0}")]
    Usage(String),
}

impl CoreError {
    pub fn dimension(op: &'static str, details: impl Into<String>) -> Self {
        CoreError::Dimension { op, details: details.into() }
    }

    pub fn numeric(op: &'static str, details: impl Into<String>) -> Self {
        CoreError::Numeric { op, details: details.into() }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
