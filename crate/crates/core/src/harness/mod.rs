//! Batch front end: configs, presets and artifact emission.

pub mod config;
pub mod presets;
pub mod run;

pub use config::ExperimentConfig;
pub use presets::{preset, DEFAULT_PRESET_SEED, PRESET_NAMES};
pub use run::{run_experiment, Manifest, Report, RunOptions, RunOutcome};
