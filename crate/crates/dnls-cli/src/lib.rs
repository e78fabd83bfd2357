//! Command-line front end for the `dnls` solver: configuration parsing, a
//! small ordered worker pool, named presets, and the subcommand
//! implementations shared between the binary and the integration tests.

pub mod commands;
pub mod config;
pub mod pool;
pub mod presets;

pub use commands::{CliError, Outcome};
pub use config::RunConfig;
