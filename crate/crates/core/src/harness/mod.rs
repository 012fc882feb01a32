//! Experiment orchestration: configuration, the bandit loop with a paired
//! baseline, surrogate-quality checks, and CSV/JSON artifacts.

mod config;
mod experiment;
mod output;
mod trace;
mod verify;

use thiserror::Error;

use crate::bandit::BanditError;
use crate::diffusion::DiffusionError;
use crate::graph::GraphError;

pub use config::{
    AlgorithmKind, AlgorithmParams, BanditSection, DiffusionConfig, ExperimentConfig, GraphSource,
    Overrides, SurrogateSection, CONFIG_VERSION,
};
pub use experiment::{
    baseline_seeds, build_graph, build_instance, build_learner, exploration_weight,
    run_algorithm, run_bandit_experiment, run_comparison, run_learner, stream_rng,
    validate_exploration, BoxedLearner, ExperimentResult, Instance, InstanceRun, Stream,
};
pub use output::{write_comparison_csv, write_summary, RunSummary, SUMMARY_FILE};
pub use trace::{
    read_trace_csv, scaled_regret, write_trace_csv, RegretTrace, RoundRecord, CSV_DECIMALS,
    TRACE_HEADER,
};
pub use verify::{
    estimate_instance_reachability, surrogate_rows, verify_surrogate, write_report_csv,
    SurrogateReport, SurrogateRow, REPORT_HEADER,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Invalid or inconsistent configuration (CLI exit code 1).
    #[error("config error: {0}")]
    Config(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
    #[error(transparent)]
    Bandit(#[from] BanditError),
}

impl HarnessError {
    pub fn is_config_error(&self) -> bool {
        matches!(self, HarnessError::Config(_))
    }
}
