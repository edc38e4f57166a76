//! Sandbox workflow: measure an emulated operative network, rebuild it in
//! simulation, evaluate marketplace models there, deploy the winner and
//! monitor the result.

mod evaluate;
mod features;
mod marketplace;
mod pipeline;
mod sweep;
mod underlay;

use std::path::Path;

use thiserror::Error;

use crate::bandit::BanditError;
use crate::error::ConfigError;
use crate::wlan::WlanError;

pub use evaluate::{
    evaluate_in_sandbox, evaluate_with, measure_fixed, measurement_seeds, DirectRunner,
    EvalConfig, SandboxReport, ScenarioRunner,
};
pub use features::{
    extract_features, extract_from_probes, fit_path_loss, prepare_sandbox, BssSpec, ScenarioSpec,
};
pub use marketplace::{Marketplace, Maturity, ModelDescriptor};
pub use pipeline::{run_pipeline, run_pipeline_with, MonitoringReport, PipelineConfig, PipelineOutcome};
pub use sweep::{
    coefficient_of_variation, exhaustive_oracle, oracle_csv, stability_sweep, sweep_csv,
    OracleRow, SweepRow, DEFAULT_ORACLE_CAP, SWEEP_CSV_HEADER,
};
pub use underlay::{Perturbation, Probe, UnderlayHandle};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SandboxError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Simulation(#[from] WlanError),
    #[error(transparent)]
    Bandit(#[from] BanditError),
    #[error("path-loss estimation failed: {0}")]
    Estimation(String),
    #[error("{0}")]
    Invalid(String),
    #[error("no marketplace model matches use case `{0}`")]
    NoModel(String),
    #[error("every candidate model failed sandbox evaluation ({} tried)", attempts.len())]
    PipelineExhausted { attempts: Vec<SandboxReport> },
    #[error("{configs} joint configurations exceed the cap of {cap}")]
    CapExceeded { configs: u64, cap: u64 },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl SandboxError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        SandboxError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}
