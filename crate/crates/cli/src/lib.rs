//! Configuration, orchestration and file output for the `chirpmatch`
//! command-line tool.

pub mod analysis;
pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{parse_config, parse_config_str, RunConfig};
pub use error::{CliError, Result};
pub use run::{run, run_full, sweep, RunManifest, SweepAxis};
