//! Configuration, file formats and subcommands for the `sharedlink` binary.

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, parse_config_str, Command, ConfigError, RunConfig};
pub use run::{run, CliError, Outcome};
