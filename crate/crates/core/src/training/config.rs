use serde::{Deserialize, Serialize};

use super::TrainError;

/// Hyperparameters for the clipped-surrogate PPO update and rollout sizing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    /// Discount factor. For the commander this discounts at the option
    /// window timescale, not per tick.
    pub gamma: f64,
    pub gae_lambda: f64,
    /// Clip radius epsilon for the probability ratio.
    pub clip: f64,
    pub learning_rate: f64,
    /// Passes over the collected batch per update.
    pub epochs: usize,
    pub minibatch_size: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    /// Minimum environment steps collected per update. Collection always
    /// finishes the running episode, so batches can overshoot slightly.
    pub rollout_steps: usize,
    /// Hard budget on environment steps across a whole training run.
    pub total_env_steps: u64,
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip: 0.2,
            learning_rate: 3e-4,
            epochs: 4,
            minibatch_size: 256,
            entropy_coef: 0.01,
            value_coef: 0.5,
            rollout_steps: 2048,
            total_env_steps: 500_000,
            seed: 0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(TrainError::Config(format!(
                "gamma must be in [0, 1), got {}",
                self.gamma
            )));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(TrainError::Config(format!(
                "gae_lambda must be in [0, 1], got {}",
                self.gae_lambda
            )));
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return Err(TrainError::Config(format!(
                "clip must be in (0, 1), got {}",
                self.clip
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(TrainError::Config("epochs must be at least 1".into()));
        }
        if self.minibatch_size == 0 {
            return Err(TrainError::Config(
                "minibatch_size must be at least 1".into(),
            ));
        }
        if self.entropy_coef < 0.0 || self.value_coef < 0.0 {
            return Err(TrainError::Config(
                "entropy_coef and value_coef must be non-negative".into(),
            ));
        }
        if self.rollout_steps == 0 {
            return Err(TrainError::Config(
                "rollout_steps must be at least 1".into(),
            ));
        }
        if self.total_env_steps == 0 {
            return Err(TrainError::Config(
                "total_env_steps must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// League self-play schedule for low-level controller training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LeagueConfig {
    /// Number of league stages. Stage 0 plays random opponents; stage k
    /// plays the snapshot frozen at the end of stage k - 1.
    pub stages: usize,
    /// Updates averaged when testing for convergence.
    pub convergence_window: usize,
    /// Relative improvement of the moving-average return below which a
    /// stage is declared converged.
    pub convergence_threshold: f64,
    /// Cap on updates per stage regardless of convergence.
    pub max_updates_per_stage: usize,
}

impl Default for LeagueConfig {
    fn default() -> Self {
        LeagueConfig {
            stages: 2,
            convergence_window: 50,
            convergence_threshold: 0.01,
            max_updates_per_stage: 400,
        }
    }
}

impl LeagueConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.stages == 0 {
            return Err(TrainError::Config("stages must be at least 1".into()));
        }
        if self.convergence_window == 0 {
            return Err(TrainError::Config(
                "convergence_window must be at least 1".into(),
            ));
        }
        if !(self.convergence_threshold > 0.0 && self.convergence_threshold.is_finite()) {
            return Err(TrainError::Config(format!(
                "convergence_threshold must be positive, got {}",
                self.convergence_threshold
            )));
        }
        if self.max_updates_per_stage == 0 {
            return Err(TrainError::Config(
                "max_updates_per_stage must be at least 1".into(),
            ));
        }
        Ok(())
    }
}
