//! Configuration-driven experiment runner.

mod config;
mod manifest;
mod perturbation;
mod plot;
mod run;
mod verify;

pub use config::{
    config_schema, CheckpointSpec, EnsembleConfig, ExperimentConfig, GridSpec, Scenario, SweepSpec, OUT_DIR_ENV,
};
pub use manifest::{
    ChildRun, Drift, Failure, RatioSummary, RunManifest, RunStatus, ScalingFit, Timing, Versions, MANIFEST_FILE,
    MANIFEST_FORMAT,
};
pub use perturbation::{perturbation, PerturbationFamily, PerturbationSpec};
pub use plot::{emit_plot_data, PLOT_QUANTITIES};
pub use run::{fit_scaling, run_experiment, run_experiment_in, TraceIndex, TRACE_DIR};
pub use verify::{tally, verify_suite, VerifyLevel, VerifyOptions};
