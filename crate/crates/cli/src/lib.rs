//! Library side of the `partsim` command: config loading and the four
//! subcommands, each writing its files into an output directory.

pub mod census;
pub mod config;
pub mod error;
pub mod eval;
pub mod simulate;
pub mod sweep;

pub use census::{cmd_census, CensusArgs};
pub use config::{RunConfig, CONFIG_SCHEMA_VERSION};
pub use error::{CliError, CliResult};
pub use eval::{run_eval, write_eval, EvalRow};
pub use simulate::{cmd_simulate, RunSummary, SimulateOutput};
pub use sweep::{run_sweep, write_sweep, SweepRow};
