use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::policy::{normalize_reward, select_arm, ArmStats, PolicyKind};
use super::BanditError;
use crate::sim::{derive_seed, RngStream, SimTime};
use crate::wlan::{simulate_scenario, Scenario};

/// Feedback each agent learns from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// Every agent receives the network-wide normalized throughput.
    #[default]
    Shared,
    /// Each agent receives its own BSS's normalized throughput.
    Own,
}

/// One transmit-power agent.
#[derive(Debug, Clone)]
pub struct BanditAgent {
    policy: PolicyKind,
    arms: Vec<f64>,
    stats: Vec<ArmStats>,
    rng: RngStream,
    t: u64,
}

impl BanditAgent {
    pub fn new(policy: PolicyKind, arms: Vec<f64>, rng: RngStream) -> Result<Self, BanditError> {
        policy.validate()?;
        if arms.is_empty() {
            return Err(BanditError::NoArms);
        }
        let stats = vec![policy.initial_stats(); arms.len()];
        Ok(Self {
            policy,
            arms,
            stats,
            rng,
            t: 0,
        })
    }

    pub fn select(&mut self) -> Result<usize, BanditError> {
        select_arm(&self.policy, &self.stats, self.t, &mut self.rng)
    }

    pub fn observe(&mut self, arm: usize, reward: f64) -> Result<(), BanditError> {
        self.stats
            .get_mut(arm)
            .ok_or(BanditError::NoArms)?
            .update(reward)?;
        self.t += 1;
        Ok(())
    }

    pub fn arms(&self) -> &[f64] {
        &self.arms
    }

    pub fn stats(&self) -> &[ArmStats] {
        &self.stats
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeConfig {
    pub iterations: usize,
    pub iter_duration: SimTime,
    pub seed: u64,
    pub reward: RewardMode,
    /// Power levels the agents may choose; defaults to the scenario's list.
    pub arms: Option<Vec<f64>>,
}

impl EpisodeConfig {
    pub fn new(iterations: usize, seed: u64) -> Self {
        Self {
            iterations,
            iter_duration: SimTime::from_secs(5),
            seed,
            reward: RewardMode::Shared,
            arms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub arms: Vec<usize>,
    pub powers_dbm: Vec<f64>,
    pub thr_mbps: Vec<f64>,
    pub rewards: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningTrace {
    pub bss_ids: Vec<u32>,
    /// Throughput normalization bound per BSS.
    pub bounds_mbps: Vec<f64>,
    pub reward: RewardMode,
    pub iterations: Vec<IterationRecord>,
}

impl LearningTrace {
    pub const CSV_HEADER: &'static str = "iter,bss_id,power_dbm,thr_mbps,reward";

    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for rec in &self.iterations {
            for (b, id) in self.bss_ids.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{:.6},{:.6}",
                    rec.iter, id, rec.powers_dbm[b], rec.thr_mbps[b], rec.rewards[b]
                );
            }
        }
        out
    }

    /// Per-BSS most frequent power over iterations `from..`, with its share.
    /// Ties go to the lower power. `None` for BSSs with no iterations in range.
    pub fn modal_powers(&self, from: usize) -> Vec<Option<(f64, f64)>> {
        let tail = self.iterations.get(from..).unwrap_or(&[]);
        (0..self.bss_ids.len())
            .map(|b| modal(tail.iter().map(|r| r.powers_dbm[b])))
            .collect()
    }

    /// Mean aggregate throughput over iterations `from..`.
    pub fn mean_aggregate(&self, from: usize) -> f64 {
        let tail = self.iterations.get(from..).unwrap_or(&[]);
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().map(|r| r.thr_mbps.iter().sum::<f64>()).sum::<f64>() / tail.len() as f64
    }
}

/// Most frequent value and its share; ties resolved toward the smaller value.
pub fn modal(values: impl IntoIterator<Item = f64>) -> Option<(f64, f64)> {
    let mut counts: Vec<(f64, usize)> = Vec::new();
    let mut n = 0usize;
    for v in values {
        n += 1;
        match counts.iter_mut().find(|(x, _)| *x == v) {
            Some(c) => c.1 += 1,
            None => counts.push((v, 1)),
        }
    }
    counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.total_cmp(&b.0)));
    counts.first().map(|(v, c)| (*v, *c as f64 / n as f64))
}

/// Decentralized learning: every iteration each BSS's agent picks a power,
/// the scenario is simulated for `iter_duration`, and agents are rewarded.
pub fn run_learning_episode(
    scenario: &Scenario,
    policies: &[PolicyKind],
    cfg: &EpisodeConfig,
) -> Result<LearningTrace, BanditError> {
    if policies.len() != scenario.bss.len() {
        return Err(BanditError::AgentCount {
            expected: scenario.bss.len(),
            got: policies.len(),
        });
    }
    let arms = cfg
        .arms
        .clone()
        .unwrap_or_else(|| scenario.power_levels.clone());
    if let Some(p) = arms.iter().find(|p| !scenario.power_levels.contains(p)) {
        return Err(BanditError::UnknownArm(*p));
    }
    let mut agents = scenario
        .bss
        .iter()
        .zip(policies)
        .map(|(b, p)| {
            BanditAgent::new(
                p.clone(),
                arms.clone(),
                RngStream::new(cfg.seed, format!("agent.bss{}", b.id)),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let bounds: Vec<f64> = (0..scenario.bss.len())
        .map(|i| scenario.throughput_bound(i))
        .collect();
    let total_bound: f64 = bounds.iter().sum();

    let mut records = Vec::with_capacity(cfg.iterations);
    for iter in 0..cfg.iterations {
        let chosen = agents
            .iter_mut()
            .map(BanditAgent::select)
            .collect::<Result<Vec<_>, _>>()?;
        let powers: Vec<f64> = chosen.iter().map(|&a| arms[a]).collect();
        let configured = scenario.with_powers(&powers).map_err(BanditError::Config)?;
        let report = simulate_scenario(
            &configured,
            cfg.iter_duration,
            derive_seed(cfg.seed, &format!("iter.{iter}")),
        )
        .map_err(BanditError::Simulation)?;
        let thr = report.per_bss_mbps();
        let rewards = match cfg.reward {
            RewardMode::Own => thr
                .iter()
                .zip(&bounds)
                .map(|(t, b)| normalize_reward(*t, *b))
                .collect::<Result<Vec<_>, _>>()?,
            RewardMode::Shared => {
                let r = normalize_reward(thr.iter().sum(), total_bound)?;
                vec![r; thr.len()]
            }
        };
        for ((agent, arm), r) in agents.iter_mut().zip(&chosen).zip(&rewards) {
            agent.observe(*arm, *r)?;
        }
        records.push(IterationRecord {
            iter,
            arms: chosen,
            powers_dbm: powers,
            thr_mbps: thr,
            rewards,
        });
    }
    Ok(LearningTrace {
        bss_ids: scenario.bss.iter().map(|b| b.id).collect(),
        bounds_mbps: bounds,
        reward: cfg.reward,
        iterations: records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wlan::canonical_scenario;

    #[test]
    fn modal_prefers_lower_value_on_ties() {
        assert_eq!(modal([7.0, 3.0, 7.0, 3.0]), Some((3.0, 0.5)));
        assert_eq!(modal([23.0, 7.0, 7.0]).unwrap().0, 7.0);
        assert_eq!(modal(Vec::<f64>::new()), None);
    }

    #[test]
    fn zero_iterations_give_empty_trace() {
        let s = canonical_scenario();
        let cfg = EpisodeConfig::new(0, 1);
        let pols = vec![PolicyKind::epsilon_greedy(); 2];
        let trace = run_learning_episode(&s, &pols, &cfg).unwrap();
        assert!(trace.is_empty());
        assert_eq!(trace.to_csv(), "iter,bss_id,power_dbm,thr_mbps,reward\n");
    }

    #[test]
    fn agent_count_must_match() {
        let s = canonical_scenario();
        let cfg = EpisodeConfig::new(1, 1);
        assert!(matches!(
            run_learning_episode(&s, &[PolicyKind::ucb1()], &cfg),
            Err(BanditError::AgentCount { .. })
        ));
    }

    #[test]
    fn arms_must_be_scenario_levels() {
        let s = canonical_scenario();
        let mut cfg = EpisodeConfig::new(1, 1);
        cfg.arms = Some(vec![8.0]);
        let pols = vec![PolicyKind::ucb1(); 2];
        assert!(matches!(
            run_learning_episode(&s, &pols, &cfg),
            Err(BanditError::UnknownArm(_))
        ));
    }
}
