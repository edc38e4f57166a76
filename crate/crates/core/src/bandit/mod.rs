//! Multi-armed-bandit transmit-power agents.

mod episode;
mod policy;
mod synthetic;

use thiserror::Error;

use crate::error::ConfigError;
use crate::wlan::WlanError;

pub use episode::{
    modal, run_learning_episode, BanditAgent, EpisodeConfig, IterationRecord, LearningTrace,
    RewardMode,
};
pub use policy::{normalize_reward, select_arm, ArmStats, PolicyKind};
pub use synthetic::{synthetic_bandit_check, SyntheticOutcome};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BanditError {
    #[error("normalization bound must be positive, got {0}")]
    InvalidBound(f64),
    #[error("reward {0} outside [0, 1]")]
    RewardOutOfRange(f64),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("no arms to choose from")]
    NoArms,
    #[error("arm {0} dBm is not one of the scenario power levels")]
    UnknownArm(f64),
    #[error("expected {expected} agents (one per BSS), got {got}")]
    AgentCount { expected: usize, got: usize },
    #[error(transparent)]
    Config(ConfigError),
    #[error(transparent)]
    Simulation(WlanError),
}
