//! Process-level error taxonomy. Every failure maps onto one of three exit
//! codes: 1 usage/config, 2 data, 3 numeric.

use thiserror::Error;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, bad config values, inconsistent settings.
    #[error("config: {0}")]
    Usage(String),

    /// Missing or malformed files and images.
    #[error("data: {0}")]
    Data(String),

    /// Non-finite values or failed numeric verification.
    #[error("numeric: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl From<hint_core::CoreError> for CliError {
    fn from(e: hint_core::CoreError) -> Self {
        match &e {
            hint_core::CoreError::Numeric { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<hint_model::config::ConfigError> for CliError {
    fn from(e: hint_model::config::ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<hint_model::checkpoint::CheckpointError> for CliError {
    fn from(e: hint_model::checkpoint::CheckpointError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<hint_data::DataError> for CliError {
    fn from(e: hint_data::DataError) -> Self {
        match &e {
            hint_data::DataError::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<hint_metrics::MetricsError> for CliError {
    fn from(e: hint_metrics::MetricsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
