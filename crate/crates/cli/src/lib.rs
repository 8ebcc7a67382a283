//! Command-line driver: configuration, presets, CSV output and the
//! `solve`, `steady` and `verify` commands.

pub mod commands;
pub mod config;
pub mod output;
pub mod presets;
pub mod verify;

pub use commands::{cmd_solve, cmd_steady, CliError};
pub use config::{ConfigError, Overrides, RunConfig};
pub use verify::{cmd_verify, Check, VerifyReport};
