//! PPO training with GAE, league self-play for the low-level controllers,
//! commander training over frozen controllers, and evaluation.
//!
//! All trainers share the same pieces: rollouts are collected into a
//! [`RolloutBuffer`], advantages come from generalized advantage
//! estimation, and [`ppo_update`] applies the clipped-surrogate update with
//! Adam. Training one low-level mode plays a league curriculum: stage 0
//! fights random opponents, stage k fights the frozen snapshot of stage
//! k - 1. The commander trains at the option timescale with the three
//! low-level controllers frozen.

mod buffer;
mod commander;
mod config;
mod evaluate;
mod hierarchy;
mod league;
mod metrics;
mod optim;
mod ppo;
mod rollout;

pub use buffer::{RolloutBuffer, Trajectory, Transition};
pub use commander::{train_commander, CommanderTrainResult};
pub use config::{LeagueConfig, PpoConfig};
pub use evaluate::{evaluate, EvalReport};
pub use hierarchy::{
    run_team_episode, CommanderSample, EpisodeTrace, FrozenControllers, TeamBehavior,
    WindowRecord,
};
pub use league::{train_low_level, ConvergenceTracker, LeagueStage, LowTrainResult};
pub use metrics::{read_metrics_csv, write_metrics_csv, MetricsRow};
pub use optim::Adam;
pub use ppo::{
    batch_loss_and_grads, ppo_update, surrogate_objective, ModeNet, TrainableNet, UpdateStats,
};
pub use rollout::{collect_low_level, policy_action, Opponent, RolloutSummary};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("invalid training setup: {0}")]
    Setup(String),
    #[error("numerical divergence: {0}")]
    Divergence(String),
    #[error(transparent)]
    Engine(#[from] crate::engine::EngineError),
    #[error(transparent)]
    Policy(#[from] crate::policy::PolicyError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
