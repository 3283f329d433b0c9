//! Experiment runner for `fsorelay`: TOML-configured SNR sweeps, CSV output
//! with a run manifest, curve comparison, and presets for Figures 2–7.

pub mod compare;
pub mod config;
pub mod error;
pub mod presets;
pub mod run;

pub use compare::{compare_report, db_gaps, Report, TolerancePolicy};
pub use config::ExperimentSpec;
pub use error::{CliError, Result};
pub use presets::{preset_specs, Preset};
pub use run::{run_experiment, RunSummary};
