//! Error taxonomy for data synthesis and image I/O.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed file contents; `offset` is the byte position the parser
    /// could not get past.
    #[error("parse error at byte {offset}: {what}")]
    Parse { offset: usize, what: String },

    /// Structurally valid file in a format or sub-format this crate does
    /// not handle (wrong extension, bit depth, color type, maxval).
    #[error("unsupported format: {0}")]
    Format(String),

    /// Invalid degradation or sampling parameters.
    #[error("invalid config: {0}")]
    Config(String),

    /// Pixel data violating the image invariants (range, shape).
    #[error("invalid image: {0}")]
    Image(String),
}

impl DataError {
    pub fn parse(offset: usize, what: impl Into<String>) -> Self {
        DataError::Parse { offset, what: what.into() }
    }
}

pub type Result<T> = std::result::Result<T, DataError>;
