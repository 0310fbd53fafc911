//! Front end for the `platoon` binary: configs, subcommands and the packaged
//! demos. Every command writes its files atomically into one output
//! directory and returns what `main` should print.

pub mod commands;
pub mod config;
pub mod demos;
pub mod output;

use std::fmt;
use std::path::PathBuf;

pub use commands::{cmd_analyze, cmd_bode, cmd_headway, cmd_simulate, cmd_sweep_n, Overrides};
pub use config::{Config, RunConfig};
pub use demos::cmd_demo_theorem;
pub use output::{ReportFormat, Sink};

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Unreadable or invalid configuration.
    Config(String),
    /// A computation failed.
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<platoon_core::Error> for CliError {
    fn from(e: platoon_core::Error) -> Self {
        match e {
            platoon_core::Error::Io(m) => CliError::Io(m),
            platoon_core::Error::StepTooLarge { dt, max_dt } => CliError::Numeric(format!(
                "time step {dt} is too large for this scenario; use dt <= {max_dt:.3e}"
            )),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

/// What a command produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub report: String,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
    /// One-line PASS/FAIL verdict of a demo.
    pub verdict: Option<String>,
}
