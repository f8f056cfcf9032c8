//! Configuration, single experiments, sweeps and their on-disk records.

pub mod config;
pub mod experiment;
pub mod record;
pub mod sweep;

pub use config::RunConfig;
pub use experiment::{execute, exit_code, run_experiment, RunRecord};
pub use sweep::{sweep, write_sweep, SweepOutcome, SweepRow};
