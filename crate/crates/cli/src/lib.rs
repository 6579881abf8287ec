//! Configuration parsing and subcommands of the `pauli-robin` binary.

pub mod commands;
pub mod config;

pub use commands::{run, RunError, Subcommand};
pub use config::{parse_config, ConfigError, Family, RunConfig};
