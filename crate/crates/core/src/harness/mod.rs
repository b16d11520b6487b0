//! Error metrics, experiment runs and their artifacts.

pub mod compare;
pub mod experiment;
pub mod export;
pub mod metrics;

pub use compare::{compare, CompareRow, CompareSummary};
pub use experiment::{
    differing_files, evaluate_stage, evolve_stage, network_field, reference_field, rerun_from_manifest, run_experiment,
    train_stage, ExperimentManifest, ExperimentOutcome, RunDir,
};
pub use export::{error_surface_csv, export_slices, slices_csv, write_error_surface};
pub use metrics::{median, relative_errors, ErrorReport, GridDescriptor};
