//! Config files, the JSON Lines trajectory record, and the subcommands.
//!
//! Exit codes: 0 on success (a diverged run is a success), 2 for invalid
//! configuration or input, 3 for I/O failures.

mod commands;
mod config;
mod record;

pub use commands::{cmd_classify, cmd_compare_ode, cmd_grad_check, cmd_run, cmd_sweep, RunSummary};
pub use config::{CompareConfig, GradCheckConfig, HyperConfig, RunConfig, SweepFileConfig};
pub use record::{read_trajectory, write_trajectory, RecordHeader};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Reads and parses a JSON config; unreadable files are I/O errors, malformed ones config errors.
pub fn load_config<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
