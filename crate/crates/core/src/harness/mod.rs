//! Configuration, seeded Monte-Carlo sweeps and CSV emission behind the CLI.

mod config;
mod experiments;
mod output;

pub use config::{
    balanced_factors, BoundsConfig, DetectorConfig, ExperimentConfig, ExperimentKind, PackingConfig, Preset,
    Problem,
};
pub use experiments::{
    derive_seed, detector_table, packing_class_from_config, run_bounds_sweep, run_detector, run_figure1a,
    run_figure1b, run_packing, trial_table, DetectorPoint, PackingRun, TrialResult,
};
pub use output::{float, opt_float, Table};
