//! Batch front end for the `steadypop-core` solver.
//!
//! Each command reads one [`config::RunConfig`], runs a single library
//! operation and writes CSV tables or `key = value` text into the output
//! directory. Numbers are written with twelve significant digits so that
//! identical configurations produce identical files.

pub mod commands;
pub mod config;
mod output;

use thiserror::Error;

pub use commands::{run, Command, Invocation};
pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] steadypop_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Input(_) => exit::INPUT,
            CliError::Core(_) | CliError::Io(_) => exit::RUNTIME,
        }
    }
}

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const RUNTIME: u8 = 1;
    pub const INPUT: u8 = 2;
    pub const NO_EQUILIBRIUM: u8 = 3;
    pub const VERIFY_FAILED: u8 = 4;
}
