//! Scenario files, parameter sweeps and figure-data output for
//! [`rydlat_core`].

pub mod config;
pub mod emit;
pub mod error;
pub mod run;

pub use config::{parse_config, parse_config_str, Scenario};
pub use error::{CliError, ConfigError};
pub use run::{run, Command};
