//! Configuration, parallel sweeps and file output for `lvcomp-core`.

pub mod analysis;
pub mod config;
pub mod output;
pub mod parallel;

pub use analysis::{analyze, Analysis};
pub use config::{ConfigError, RawConfig, RunConfig, SweepConfig};
pub use parallel::run_sweep_parallel;
