//! Library side of the `gatesynth` command: config parsing, synthesis runs,
//! parameter sweeps, verification and decomposition reports.

pub mod config;
pub mod decompose;
pub mod error;
pub mod output;
pub mod run;
pub mod sweep;
pub mod verify;

pub use config::JobConfig;
pub use error::CliError;
pub use run::{run, RunRecord, Summary};
pub use sweep::{sweep, sweep_from_config, SweepCell};
pub use verify::{verify, VerifyReport};
