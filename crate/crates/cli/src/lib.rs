//! Experiment runner: single solves, spectra, cluster tables and
//! convergence ladders, written as CSV and JSON.

pub mod config;
pub mod format;
pub mod problem;
pub mod run;

use std::fmt;

pub use config::{Cli, Command, ExperimentConfig, Flags, Mode};
pub use run::run;

/// Version of every JSON report this crate writes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config file or parameter combination. Exit code 1.
    Config(String),
    /// Output could not be written. Exit code 1.
    Io(std::io::Error),
    /// A solve did not converge or the eigensolver failed. Exit code 2.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.into())
    }
}
