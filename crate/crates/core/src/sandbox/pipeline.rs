use serde::{Deserialize, Serialize};

use super::evaluate::{evaluate_with, DirectRunner, EvalConfig, SandboxReport, ScenarioRunner};
use super::features::{extract_features, prepare_sandbox, ScenarioSpec};
use super::marketplace::Marketplace;
use super::underlay::UnderlayHandle;
use super::SandboxError;
use crate::sim::SimTime;
use crate::wlan::WindowSample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub threshold_pct: f64,
    /// Models tried before giving up.
    pub max_models: usize,
    /// Learning seeds used in the sandbox.
    pub seeds: Vec<u64>,
    pub use_case: Vec<String>,
    pub eval: EvalConfig,
    pub monitor_duration_s: f64,
    pub sample_interval_s: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            threshold_pct: 20.0,
            max_models: 3,
            seeds: vec![1, 2, 3, 4],
            use_case: vec![Marketplace::TPC_OBSS.to_string()],
            eval: EvalConfig::default(),
            monitor_duration_s: 20.0,
            sample_interval_s: 1.0,
        }
    }
}

impl PipelineConfig {
    pub fn from_json_str(text: &str) -> Result<Self, SandboxError> {
        let cfg: Self = crate::error::from_json_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SandboxError> {
        self.eval.validate()?;
        if self.max_models == 0 {
            return Err(SandboxError::Invalid("max_models must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(SandboxError::Invalid("seeds must not be empty".into()));
        }
        if !(self.sample_interval_s > 0.0 && self.monitor_duration_s >= self.sample_interval_s) {
            return Err(SandboxError::Invalid(
                "monitoring needs 0 < sample_interval_s <= monitor_duration_s".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitoringReport {
    pub bss_ids: Vec<u32>,
    /// Mean per-BSS throughput over the samples before deployment.
    pub pre_mbps: Vec<f64>,
    pub post_mbps: Vec<f64>,
    pub pre_aggregate_mbps: f64,
    pub post_aggregate_mbps: f64,
    pub improvement_pct: f64,
    pub window_s: f64,
    pub samples: usize,
    pub pre_config_dbm: Vec<f64>,
    pub post_config_dbm: Vec<f64>,
}

fn sample_means(samples: &[WindowSample], n_bss: usize) -> Vec<f64> {
    let n = samples.len().max(1) as f64;
    (0..n_bss)
        .map(|b| samples.iter().map(|s| s.thr_mbps[b]).sum::<f64>() / n)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutcome {
    pub features: ScenarioSpec,
    /// Every sandbox evaluation in order; the last one passed.
    pub attempts: Vec<SandboxReport>,
    pub monitoring: MonitoringReport,
}

impl PipelineOutcome {
    pub fn sandbox(&self) -> &SandboxReport {
        self.attempts.last().expect("a passing attempt")
    }
}

pub fn run_pipeline(
    u: &mut UnderlayHandle,
    m: &mut Marketplace,
    cfg: &PipelineConfig,
) -> Result<PipelineOutcome, SandboxError> {
    run_pipeline_with(&mut DirectRunner, u, m, cfg)
}

/// Characterize, prepare, select, evaluate (retrying down the ranking),
/// deploy, monitor and record.
///
/// Every evaluation appends its improvement to the model's history: the
/// sandbox figure for failed attempts, the monitored figure for the deployed
/// model. A bound marketplace is saved whether or not a model passed. The
/// underlay is touched only after a passing evaluation.
pub fn run_pipeline_with(
    runner: &mut dyn ScenarioRunner,
    u: &mut UnderlayHandle,
    m: &mut Marketplace,
    cfg: &PipelineConfig,
) -> Result<PipelineOutcome, SandboxError> {
    cfg.validate()?;
    let features = extract_features(u)?;
    let sandbox = prepare_sandbox(&features)?;
    let candidates: Vec<_> = m
        .rank(&cfg.use_case)
        .into_iter()
        .take(cfg.max_models)
        .cloned()
        .collect();
    if candidates.is_empty() {
        return Err(SandboxError::NoModel(cfg.use_case.join(",")));
    }

    let mut attempts = Vec::new();
    let mut passed = None;
    for model in &candidates {
        let report = evaluate_with(runner, &sandbox, model, cfg.threshold_pct, &cfg.seeds, &cfg.eval)?;
        let ok = report.passed;
        attempts.push(report);
        if ok {
            passed = Some(model.id.clone());
            break;
        }
        m.record(&model.id, attempts.last().expect("pushed").improvement_pct)?;
    }
    let Some(model_id) = passed else {
        if m.dir().is_some() {
            m.save()?;
        }
        return Err(SandboxError::PipelineExhausted { attempts });
    };

    let window = SimTime::from_secs_f64(cfg.monitor_duration_s);
    let interval = SimTime::from_secs_f64(cfg.sample_interval_s);
    let n_bss = sandbox.bss.len();
    let pre_config = u.config();
    let pre = u.monitor(window, interval, "monitor.pre")?;
    u.apply(&attempts.last().expect("passing attempt").configuration)?;
    let post = u.monitor(window, interval, "monitor.post")?;
    let pre_mbps = sample_means(&pre.samples, n_bss);
    let post_mbps = sample_means(&post.samples, n_bss);
    let pre_aggregate: f64 = pre_mbps.iter().sum();
    let post_aggregate: f64 = post_mbps.iter().sum();
    let improvement_pct = if pre_aggregate > 0.0 {
        100.0 * (post_aggregate - pre_aggregate) / pre_aggregate
    } else {
        0.0
    };
    let monitoring = MonitoringReport {
        bss_ids: sandbox.bss.iter().map(|b| b.id).collect(),
        pre_mbps,
        post_mbps,
        pre_aggregate_mbps: pre_aggregate,
        post_aggregate_mbps: post_aggregate,
        improvement_pct,
        window_s: cfg.monitor_duration_s,
        samples: post.samples.len(),
        pre_config_dbm: pre_config,
        post_config_dbm: u.config(),
    };
    m.record(&model_id, improvement_pct)?;
    if m.dir().is_some() {
        m.save()?;
    }
    Ok(PipelineOutcome {
        features,
        attempts,
        monitoring,
    })
}
