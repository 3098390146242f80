use crate::engine::AircraftId;
use crate::policy::ActionMask;

use super::TrainError;

/// One recorded decision step for a single agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    /// Sampled index per action head.
    pub actions: Vec<usize>,
    pub mask: ActionMask,
    pub log_prob: f64,
    pub reward: f64,
    /// Value estimate at `obs` from the critic that collected the step.
    pub value: f64,
    /// True on the final step of a trajectory that ended for real (death
    /// or episode end), false on truncation.
    pub done: bool,
    pub agent: AircraftId,
    /// Filled by [`RolloutBuffer::compute_gae`].
    pub advantage: f64,
    /// Discounted return target, `advantage + value`.
    pub ret: f64,
}

/// A contiguous run of transitions for one agent with no resets inside.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub steps: Vec<Transition>,
    /// Critic estimate of the state after the last step, used to bootstrap
    /// truncated trajectories. Ignored when the last step is done.
    pub bootstrap_value: f64,
}

/// Collected experience for one PPO update.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RolloutBuffer {
    pub trajectories: Vec<Trajectory>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.trajectories.iter().map(|t| t.steps.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.iter().all(|t| t.steps.is_empty())
    }

    pub fn steps(&self) -> impl Iterator<Item = &Transition> {
        self.trajectories.iter().flat_map(|t| t.steps.iter())
    }

    pub fn mean_reward(&self) -> f64 {
        let n = self.len();
        if n == 0 {
            return 0.0;
        }
        self.steps().map(|s| s.reward).sum::<f64>() / n as f64
    }

    /// Generalized advantage estimation, run independently per trajectory
    /// so episode boundaries reset the recursion. Also fills the return
    /// targets `ret = advantage + value`.
    pub fn compute_gae(&mut self, gamma: f64, lambda: f64) -> Result<(), TrainError> {
        for traj in &mut self.trajectories {
            let n = traj.steps.len();
            if n == 0 {
                continue;
            }
            for (i, step) in traj.steps.iter().enumerate() {
                if step.done && i + 1 != n {
                    return Err(TrainError::Setup(
                        "done step in the middle of a trajectory".into(),
                    ));
                }
            }
            let mut next_advantage = 0.0;
            for t in (0..n).rev() {
                let (next_value, next_mask) = if t + 1 < n {
                    (traj.steps[t + 1].value, 1.0)
                } else if traj.steps[t].done {
                    (0.0, 0.0)
                } else {
                    (traj.bootstrap_value, 1.0)
                };
                let step = &mut traj.steps[t];
                let delta = step.reward + gamma * next_value * next_mask - step.value;
                step.advantage = delta + gamma * lambda * next_mask * next_advantage;
                step.ret = step.advantage + step.value;
                next_advantage = step.advantage;
            }
        }
        Ok(())
    }
}
