//! End-to-end pipeline, Monte Carlo sweeps and experiment I/O.

pub mod oracle;
pub mod output;
pub mod presets;
pub mod run;
pub mod spec;

pub use output::{write_outputs, CSV_HEADER};
pub use presets::{preset, PRESET_NAMES};
pub use run::{run_bcs, run_bcs_with, run_experiment, ExperimentOutcome, SeparationResult, TrialRecord};
pub use spec::{ExperimentSpec, Method};
