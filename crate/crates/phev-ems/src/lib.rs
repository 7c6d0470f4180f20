//! Command-line workbench: drive-cycle experiments comparing a rule-based
//! charge-depleting/charge-sustaining controller, a dynamic-programming
//! benchmark, and a trained continuous-discrete agent on one powertrain model.
//!
//! Every command is a pure function of (configuration, seed): re-running with
//! identical inputs rewrites byte-identical output files.

pub mod cli;
pub mod commands;
pub mod report;

use std::fmt;

/// Command errors, split by exit code: configuration problems exit 2,
/// runtime failures exit 3.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn config(e: impl fmt::Display) -> CliError {
        CliError::Config(e.to_string())
    }

    pub fn runtime(e: impl fmt::Display) -> CliError {
        CliError::Runtime(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
