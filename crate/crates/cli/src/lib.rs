//! Scenario files and the noise, SQL, spectrum and validation experiments
//! behind the `splitbeam` command.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;
pub mod scenario;

pub use commands::{cmd_noise, cmd_spectrum, cmd_sql, cmd_validate, CliError, Report};
pub use config::{ConfigError, ScenarioConfig};
