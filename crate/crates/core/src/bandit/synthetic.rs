use super::policy::{select_arm, PolicyKind};
use super::BanditError;
use crate::sim::RngStream;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticOutcome {
    /// Share of best-arm selections over the final 10% of steps.
    pub best_arm_rate: f64,
    pub selections: Vec<usize>,
}

/// Runs `policy` against independent Bernoulli arms with the given means.
///
/// The best arm is the highest mean (lowest index on ties). With zero steps the
/// rate is reported as 0.
pub fn synthetic_bandit_check(
    policy: &PolicyKind,
    arm_means: &[f64],
    steps: usize,
    seed: u64,
) -> Result<SyntheticOutcome, BanditError> {
    policy.validate()?;
    if arm_means.is_empty() {
        return Err(BanditError::NoArms);
    }
    if let Some(m) = arm_means.iter().find(|m| !(0.0..=1.0).contains(*m)) {
        return Err(BanditError::RewardOutOfRange(*m));
    }
    let best = arm_means
        .iter()
        .enumerate()
        .fold(0, |b, (i, m)| if *m > arm_means[b] { i } else { b });

    let mut stats = vec![policy.initial_stats(); arm_means.len()];
    let mut agent_rng = RngStream::new(seed, "synthetic.agent");
    let mut env_rng = RngStream::new(seed, "synthetic.env");
    let mut selections = Vec::with_capacity(steps);
    for t in 0..steps {
        let arm = select_arm(policy, &stats, t as u64, &mut agent_rng)?;
        let reward = if env_rng.uniform() < arm_means[arm] {
            1.0
        } else {
            0.0
        };
        stats[arm].update(reward)?;
        selections.push(arm);
    }
    let window = (steps / 10).max(1).min(steps);
    let tail = &selections[steps - window..];
    let best_arm_rate = if tail.is_empty() {
        0.0
    } else {
        tail.iter().filter(|&&a| a == best).count() as f64 / tail.len() as f64
    };
    Ok(SyntheticOutcome {
        best_arm_rate,
        selections,
    })
}
