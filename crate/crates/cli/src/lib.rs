//! Experiment runner for the `charged-pphi` numerics: config parsing and
//! hashing, subcommand orchestration, JSON/CSV persistence, golden checks.

pub mod commands;
pub mod config;
pub mod error;
pub mod golden;
pub mod output;

pub use error::{exit, CliError, CliResult};
