//! Batch front end for building, checking and classifying truncated
//! representations of quantum Stiefel manifolds.

pub mod bundle;
pub mod commands;
pub mod config;
pub mod report;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const PASS: u8 = 0;
    pub const FAIL: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const IO: u8 = 3;
    pub const CLASSIFICATION: u8 = 4;
    pub const TRUNCATION: u8 = 5;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("classification failed: {0}")]
    Classification(String),
    #[error("truncation too small: {message}; rerun with D ≥ {suggested}")]
    Truncation { message: String, suggested: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Io(_) => exit::IO,
            CliError::Classification(_) => exit::CLASSIFICATION,
            CliError::Truncation { .. } => exit::TRUNCATION,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Classification(_) => "classification",
            CliError::Truncation { .. } => "truncation",
        }
    }
}
