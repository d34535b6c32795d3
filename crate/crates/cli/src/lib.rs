//! Configuration parsing and suite orchestration behind the `ffdlab` binary.

pub mod config;
pub mod error;
pub mod suites;

pub use config::{parse_config, ExperimentConfig, Suite};
pub use error::{CliError, Result};
