//! Commander training at the option-window timescale.
//!
//! The commander picks one of the three frozen controllers per agent every
//! twenty ticks and is rewarded per window (+1 per hostile kill, -1 for
//! dying). PPO runs over window-level transitions, so the configured gamma
//! discounts windows, not engine ticks. Opponents fly the same frozen
//! attack/engage controllers, dealt per aircraft at spawn, with no
//! commander of their own.

use std::collections::BTreeMap;

use crate::engine::{reward_commander, AircraftId, ScenarioConfig, MAX_SENSING};
use crate::policy::{ActionMask, PolicyNet, COMMANDER_HEAD_SPEC};
use crate::rng::{derive_seed, substream};

use super::buffer::{RolloutBuffer, Trajectory, Transition};
use super::config::PpoConfig;
use super::hierarchy::{run_team_episode, FrozenControllers, TeamBehavior};
use super::metrics::MetricsRow;
use super::optim::Adam;
use super::ppo::ppo_update;
use super::TrainError;

#[derive(Debug, Clone)]
pub struct CommanderTrainResult {
    pub policy: PolicyNet,
    pub metrics: Vec<MetricsRow>,
    /// Commander decisions consumed, the unit of the training budget.
    pub decisions: u64,
}

/// Builds window-level trajectories out of the episodes of one collection
/// round, recording at least `min_decisions` commander decisions.
fn collect_commander(
    net: &PolicyNet,
    m: usize,
    controllers: &FrozenControllers,
    scenario: &ScenarioConfig,
    min_decisions: usize,
    seed: u64,
) -> Result<(RolloutBuffer, f64), TrainError> {
    let mask = ActionMask::allow_all(&COMMANDER_HEAD_SPEC);
    let mut buffer = RolloutBuffer::default();
    let mut episode_returns = Vec::new();
    let mut episode = 0u64;

    while buffer.len() < min_decisions {
        let trace = run_team_episode(
            scenario,
            TeamBehavior::Commander { net, m, controllers, greedy: false },
            TeamBehavior::AttackEngageSplit { controllers },
            derive_seed(seed, "episode", episode),
        )?;

        let mut per_agent: BTreeMap<AircraftId, Trajectory> = BTreeMap::new();
        for window in &trace.windows {
            for sample in &window.samples {
                let reward = reward_commander(&window.events, sample.agent);
                per_agent
                    .entry(sample.agent)
                    .or_default()
                    .steps
                    .push(Transition {
                        obs: sample.obs.clone(),
                        actions: vec![sample.mode.index()],
                        mask: mask.clone(),
                        log_prob: sample.log_prob,
                        reward,
                        value: sample.value,
                        done: false,
                        agent: sample.agent,
                        advantage: 0.0,
                        ret: 0.0,
                    });
            }
        }
        for (_, mut traj) in per_agent {
            if let Some(last) = traj.steps.last_mut() {
                // Death or episode end: either way the trajectory is over.
                last.done = true;
                episode_returns.push(traj.steps.iter().map(|s| s.reward).sum::<f64>());
                buffer.trajectories.push(traj);
            }
        }
        episode += 1;
    }

    let mean_return = episode_returns.iter().sum::<f64>() / episode_returns.len() as f64;
    Ok((buffer, mean_return))
}

/// Trains a fresh commander with sensing capability `m` over the frozen
/// controllers. The controllers are borrowed immutably for the whole run,
/// so their parameters cannot move.
pub fn train_commander(
    m: usize,
    controllers: &FrozenControllers,
    scenario: &ScenarioConfig,
    ppo: &PpoConfig,
    max_updates: usize,
) -> Result<CommanderTrainResult, TrainError> {
    if m == 0 || m > MAX_SENSING {
        return Err(TrainError::Config(format!(
            "sensing capability m={m} outside 1..={MAX_SENSING}"
        )));
    }
    if max_updates == 0 {
        return Err(TrainError::Config("max_updates must be at least 1".into()));
    }
    ppo.validate()?;
    scenario.validate()?;

    let mut net = PolicyNet::commander(m, &mut substream(ppo.seed, "commander-init", m as u64));
    let mut adam = Adam::new(ppo.learning_rate, net.param_count());
    let mut metrics = Vec::new();
    let mut decisions = 0u64;

    for update in 0..max_updates as u64 {
        if decisions >= ppo.total_env_steps {
            break;
        }
        let collect_seed = derive_seed(ppo.seed, "commander-collect", update);
        let (mut buffer, mean_return) = collect_commander(
            &net,
            m,
            controllers,
            scenario,
            ppo.rollout_steps,
            collect_seed,
        )?;
        buffer.compute_gae(ppo.gamma, ppo.gae_lambda)?;
        decisions += buffer.len() as u64;

        let mut update_rng = substream(ppo.seed, "commander-update", update);
        let stats = ppo_update(&mut net, &buffer, ppo, &mut adam, &mut update_rng)?;
        metrics.push(MetricsRow {
            update,
            stage: 0,
            env_steps: decisions,
            mean_return,
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            entropy: stats.entropy,
            approx_kl: stats.approx_kl,
            clip_fraction: stats.clip_fraction,
        });
    }

    Ok(CommanderTrainResult { policy: net, metrics, decisions })
}
