//! Datasets, experiment configuration, runners, and reports.

mod config;
mod data;
mod experiment;
mod idx;

pub use config::{DatasetSpec, ExperimentConfig, ModelPreset, ModelSpec, ENV_OUT, ENV_SEED};
pub use data::{gen_synthetic, Dataset, SplitTag, SyntheticKind};
pub use experiment::{
    artifact_paths, report, run_experiment, RunSummary, ACCURACY_CSV_HEADER, MARKER_FILE,
    REPORT_CSV_HEADER, TREND_CSV_HEADER,
};
pub use idx::load_idx;
