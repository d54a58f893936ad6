//! Batch drivers for the `cavity-bic` command-line tool.

pub mod config;
pub mod drivers;

use thiserror::Error;

pub use config::{resolve, Experiment, RunConfig, Settings};
pub use drivers::{run, Report};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 for configuration problems, 2 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

/// Exit status for a run whose checks failed.
pub const TOLERANCE_EXIT: u8 = 3;
