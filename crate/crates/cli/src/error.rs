use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Core(#[from] inzsmf_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("metadata output: {0}")]
    Json(#[from] serde_json::Error),

    #[error("selftest: {0} check(s) failed")]
    Selftest(usize),
}

impl CliError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Core(inzsmf_core::Error::InvalidConfig { .. }) => 2,
            _ => 1,
        }
    }
}
