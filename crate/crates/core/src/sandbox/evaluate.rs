use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::marketplace::ModelDescriptor;
use super::SandboxError;
use crate::bandit::{modal, run_learning_episode, EpisodeConfig, LearningTrace};
use crate::sim::{derive_seed, SimTime};
use crate::wlan::{simulate_scenario, Scenario, ThroughputReport};

/// Anything that can run a scenario to completion and report throughput.
pub trait ScenarioRunner {
    fn run(
        &mut self,
        s: &Scenario,
        duration: SimTime,
        seed: u64,
    ) -> Result<ThroughputReport, SandboxError>;
}

/// Calls the engine in-process.
#[derive(Debug, Default, Clone, Copy)]
pub struct DirectRunner;

impl ScenarioRunner for DirectRunner {
    fn run(
        &mut self,
        s: &Scenario,
        duration: SimTime,
        seed: u64,
    ) -> Result<ThroughputReport, SandboxError> {
        Ok(simulate_scenario(s, duration, seed)?)
    }
}

/// Runs a fixed configuration once per seed.
pub fn measure_fixed(
    runner: &mut dyn ScenarioRunner,
    s: &Scenario,
    duration: SimTime,
    seeds: &[u64],
) -> Result<Vec<ThroughputReport>, SandboxError> {
    seeds.iter().map(|&seed| runner.run(s, duration, seed)).collect()
}

fn mean_aggregate(reports: &[ThroughputReport]) -> f64 {
    if reports.is_empty() {
        return 0.0;
    }
    reports.iter().map(ThroughputReport::aggregate_mbps).sum::<f64>() / reports.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub iterations: usize,
    pub iter_duration_s: f64,
    /// Length of each fixed-configuration measurement run.
    pub measure_duration_s: f64,
    /// Number of fresh seeds for the fixed-configuration measurements.
    pub measure_runs: usize,
    /// Fraction of final iterations the converged configuration is read from.
    pub tail_fraction: f64,
    /// Minimum share of the modal arm for a BSS to count as converged.
    pub min_modal_share: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iterations: 200,
            iter_duration_s: 5.0,
            measure_duration_s: 10.0,
            measure_runs: 3,
            tail_fraction: 0.25,
            min_modal_share: 0.4,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), SandboxError> {
        let bad = |m: &str| Err(SandboxError::Invalid(m.to_string()));
        if self.iterations == 0 {
            return bad("iterations must be positive");
        }
        if !(self.iter_duration_s > 0.0 && self.measure_duration_s > 0.0) {
            return bad("durations must be positive");
        }
        if self.measure_runs == 0 {
            return bad("measure_runs must be positive");
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return bad("tail_fraction must be in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.min_modal_share) {
            return bad("min_modal_share must be in [0, 1]");
        }
        Ok(())
    }

    /// First iteration index of the convergence window.
    pub fn tail_start(&self) -> usize {
        let len = ((self.iterations as f64 * self.tail_fraction).ceil() as usize).max(1);
        self.iterations.saturating_sub(len)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandboxReport {
    pub model_id: String,
    pub baseline_mbps: f64,
    /// Converged power per BSS, dBm.
    pub configuration: Vec<f64>,
    /// Share of the modal arm per BSS over the convergence window, pooled across seeds.
    pub modal_share: Vec<f64>,
    pub candidate_mbps: f64,
    pub improvement_pct: f64,
    pub threshold_pct: f64,
    pub passed: bool,
    pub reason: Option<String>,
    pub seeds: Vec<u64>,
    pub measure_seeds: Vec<u64>,
}

/// Seeds for fixed-configuration measurements, disjoint in label space from
/// those the learning episodes use.
pub fn measurement_seeds(seeds: &[u64], runs: usize) -> Vec<u64> {
    let master = seeds
        .iter()
        .fold(0u64, |acc, s| derive_seed(acc ^ s, "sandbox.seed-fold"));
    (0..runs)
        .map(|k| derive_seed(master, &format!("sandbox.measure.{k}")))
        .collect()
}

pub fn evaluate_in_sandbox(
    s: &Scenario,
    model: &ModelDescriptor,
    threshold_pct: f64,
    seeds: &[u64],
    cfg: &EvalConfig,
) -> Result<SandboxReport, SandboxError> {
    evaluate_with(&mut DirectRunner, s, model, threshold_pct, seeds, cfg)
}

/// Learns per seed, reads off the converged configuration, then measures it
/// and the default configuration with `runner` over fresh seeds.
pub fn evaluate_with(
    runner: &mut dyn ScenarioRunner,
    s: &Scenario,
    model: &ModelDescriptor,
    threshold_pct: f64,
    seeds: &[u64],
    cfg: &EvalConfig,
) -> Result<SandboxReport, SandboxError> {
    cfg.validate()?;
    if seeds.is_empty() {
        return Err(SandboxError::Invalid("at least one seed is required".into()));
    }
    let traces = learn(s, model, seeds, cfg)?;
    let from = cfg.tail_start();
    let mut configuration = Vec::with_capacity(s.bss.len());
    let mut modal_share = Vec::with_capacity(s.bss.len());
    for b in 0..s.bss.len() {
        let pooled = traces
            .iter()
            .flat_map(|t| t.iterations[from..].iter().map(move |r| r.powers_dbm[b]));
        let (p, share) = modal(pooled).expect("convergence window is non-empty");
        configuration.push(p);
        modal_share.push(share);
    }

    let measure_seeds = measurement_seeds(seeds, cfg.measure_runs);
    let duration = SimTime::from_secs_f64(cfg.measure_duration_s);
    let baseline = mean_aggregate(&measure_fixed(
        runner,
        &s.with_default_powers(),
        duration,
        &measure_seeds,
    )?);
    let candidate = mean_aggregate(&measure_fixed(
        runner,
        &s.with_powers(&configuration)?,
        duration,
        &measure_seeds,
    )?);

    let mut reason = None;
    let improvement_pct = if baseline > 0.0 {
        100.0 * (candidate - baseline) / baseline
    } else {
        reason = Some("baseline throughput is zero".to_string());
        0.0
    };
    if let Some((b, share)) = modal_share
        .iter()
        .enumerate()
        .find(|(_, sh)| **sh < cfg.min_modal_share)
    {
        reason = Some(format!(
            "no convergence: BSS {} modal share {:.2} < {:.2}",
            s.bss[b].id, share, cfg.min_modal_share
        ));
    } else if reason.is_none() && improvement_pct < threshold_pct {
        reason = Some(format!(
            "improvement {improvement_pct:.2}% below threshold {threshold_pct}%"
        ));
    }
    Ok(SandboxReport {
        model_id: model.id.clone(),
        baseline_mbps: baseline,
        configuration,
        modal_share,
        candidate_mbps: candidate,
        improvement_pct,
        threshold_pct,
        passed: reason.is_none(),
        reason,
        seeds: seeds.to_vec(),
        measure_seeds,
    })
}

fn learn(
    s: &Scenario,
    model: &ModelDescriptor,
    seeds: &[u64],
    cfg: &EvalConfig,
) -> Result<Vec<LearningTrace>, SandboxError> {
    let policies = vec![model.algorithm.clone(); s.bss.len()];
    seeds
        .par_iter()
        .map(|&seed| {
            let ep = EpisodeConfig {
                iterations: cfg.iterations,
                iter_duration: SimTime::from_secs_f64(cfg.iter_duration_s),
                seed,
                reward: model.reward,
                arms: model.arms.clone(),
            };
            Ok(run_learning_episode(s, &policies, &ep)?)
        })
        .collect()
}
