use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use super::BanditError;
use crate::sim::RngStream;

/// Arm-selection rule and its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyKind {
    /// Explore uniformly with probability `eps0 * decay^t`, otherwise exploit.
    EpsilonGreedy { eps0: f64, decay: f64 },
    Ucb1 { c: f64 },
    Thompson {
        #[serde(default = "one")]
        alpha0: f64,
        #[serde(default = "one")]
        beta0: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl PolicyKind {
    pub fn epsilon_greedy() -> Self {
        PolicyKind::EpsilonGreedy {
            eps0: 1.0,
            decay: 0.995,
        }
    }

    pub fn ucb1() -> Self {
        PolicyKind::Ucb1 {
            c: std::f64::consts::SQRT_2,
        }
    }

    pub fn thompson() -> Self {
        PolicyKind::Thompson {
            alpha0: 1.0,
            beta0: 1.0,
        }
    }

    /// Parses the CLI names `eps-greedy`, `ucb1` and `thompson` into default policies.
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "eps-greedy" | "epsilon-greedy" => Some(Self::epsilon_greedy()),
            "ucb1" => Some(Self::ucb1()),
            "thompson" => Some(Self::thompson()),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::EpsilonGreedy { .. } => "eps-greedy",
            PolicyKind::Ucb1 { .. } => "ucb1",
            PolicyKind::Thompson { .. } => "thompson",
        }
    }

    pub fn validate(&self) -> Result<(), BanditError> {
        let bad = |m: &str| Err(BanditError::InvalidPolicy(m.to_string()));
        match *self {
            PolicyKind::EpsilonGreedy { eps0, decay } => {
                if !(0.0..=1.0).contains(&eps0) {
                    return bad("eps0 must lie in [0, 1]");
                }
                if !(decay > 0.0 && decay <= 1.0) {
                    return bad("decay must lie in (0, 1]");
                }
            }
            PolicyKind::Ucb1 { c } => {
                if !(c > 0.0 && c.is_finite()) {
                    return bad("c must be positive");
                }
            }
            PolicyKind::Thompson { alpha0, beta0 } => {
                if !(alpha0 > 0.0 && beta0 > 0.0 && alpha0.is_finite() && beta0.is_finite()) {
                    return bad("alpha0 and beta0 must be positive");
                }
            }
        }
        Ok(())
    }

    pub fn initial_stats(&self) -> ArmStats {
        match *self {
            PolicyKind::Thompson { alpha0, beta0 } => ArmStats::with_prior(alpha0, beta0),
            _ => ArmStats::default(),
        }
    }
}

/// Per-arm learning state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmStats {
    pub pulls: u64,
    pub mean_reward: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for ArmStats {
    fn default() -> Self {
        Self::with_prior(1.0, 1.0)
    }
}

impl ArmStats {
    pub fn with_prior(alpha: f64, beta: f64) -> Self {
        Self {
            pulls: 0,
            mean_reward: 0.0,
            alpha,
            beta,
        }
    }

    /// Folds one reward in `[0, 1]` into the running mean and Beta pseudo-counts.
    pub fn update(&mut self, reward: f64) -> Result<(), BanditError> {
        if !(0.0..=1.0).contains(&reward) {
            return Err(BanditError::RewardOutOfRange(reward));
        }
        self.pulls += 1;
        self.mean_reward += (reward - self.mean_reward) / self.pulls as f64;
        self.alpha += reward;
        self.beta += 1.0 - reward;
        Ok(())
    }
}

/// `min(throughput / bound, 1)`.
pub fn normalize_reward(throughput_mbps: f64, bound_mbps: f64) -> Result<f64, BanditError> {
    if bound_mbps.is_nan() || bound_mbps <= 0.0 || !bound_mbps.is_finite() {
        return Err(BanditError::InvalidBound(bound_mbps));
    }
    Ok((throughput_mbps / bound_mbps).clamp(0.0, 1.0))
}

/// Lowest index among the maxima.
fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// Picks an arm at iteration `t` (0-based).
pub fn select_arm(
    policy: &PolicyKind,
    stats: &[ArmStats],
    t: u64,
    rng: &mut RngStream,
) -> Result<usize, BanditError> {
    if stats.is_empty() {
        return Err(BanditError::NoArms);
    }
    let arm = match *policy {
        PolicyKind::EpsilonGreedy { eps0, decay } => {
            let eps = eps0 * decay.powf(t as f64);
            if rng.uniform() < eps {
                rng.below(stats.len() as u64) as usize
            } else {
                argmax(stats.iter().map(|s| s.mean_reward))
            }
        }
        PolicyKind::Ucb1 { c } => {
            if let Some(i) = stats.iter().position(|s| s.pulls == 0) {
                i
            } else {
                let ln_t = (t.max(1) as f64).ln();
                argmax(
                    stats
                        .iter()
                        .map(|s| s.mean_reward + c * (ln_t / s.pulls as f64).sqrt()),
                )
            }
        }
        PolicyKind::Thompson { .. } => {
            let mut draws = Vec::with_capacity(stats.len());
            for s in stats {
                let d = Beta::new(s.alpha, s.beta)
                    .map_err(|e| BanditError::InvalidPolicy(e.to_string()))?;
                draws.push(d.sample(rng));
            }
            argmax(draws.into_iter())
        }
    };
    Ok(arm)
}
