//! Experience collection for low-level controller training.
//!
//! All agent-team aircraft run the same mode policy and record into one
//! shared buffer (centralized training, decentralized execution), so every
//! transition carries its agent id. Collection always finishes the running
//! episode: trajectories end for real (death or episode end) and never
//! need bootstrap values.

use std::collections::BTreeMap;

use ndarray::ArrayView2;
use rand_chacha::ChaCha8Rng;

use crate::engine::{
    defend_terms, low_level_observation, outcome, reward_attack, reward_defend, reward_engage,
    spawn_scenario, step, AircraftId, Controller, LowLevelAction, Mode, Outcome, RandomController,
    ScenarioConfig, Team, WorldState,
};
use crate::policy::{
    sample_heads, ActionMask, ForwardPass, LowLevelPolicies, PolicyError, PolicyNet,
    LOW_LEVEL_HEAD_SPEC,
};
use crate::rng::{derive_seed, substream};

use super::buffer::{RolloutBuffer, Trajectory, Transition};
use super::TrainError;

/// The opposing team during low-level training rollouts.
pub enum Opponent<'a> {
    /// League stage 0: uniform random maneuvers.
    Random,
    /// Later league stages: a frozen snapshot of an earlier policy.
    Snapshot(&'a PolicyNet),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutSummary {
    pub episodes: usize,
    /// Recorded agent decisions, the unit of the training step budget.
    pub env_steps: usize,
    /// Mean summed reward over agent trajectories.
    pub mean_episode_return: f64,
}

/// A sampled decision with everything PPO needs to learn from it later.
struct Decision {
    obs: Vec<f64>,
    actions: Vec<usize>,
    mask: ActionMask,
    log_prob: f64,
    value: f64,
    action: LowLevelAction,
}

fn decide<F>(
    world: &WorldState,
    id: AircraftId,
    forward: F,
    rng: &mut ChaCha8Rng,
) -> Result<Decision, TrainError>
where
    F: FnOnce(ArrayView2<f64>) -> Result<ForwardPass, PolicyError>,
{
    let obs = low_level_observation(world, id)?;
    let mask = ActionMask::for_aircraft(&LOW_LEVEL_HEAD_SPEC, world.aircraft(id)?);
    let view = ArrayView2::from_shape((1, obs.len()), &obs)
        .expect("observation vector reshapes to one row");
    let pass = forward(view)?;
    let (actions, log_prob) = sample_heads(&pass.logit_rows(0), &mask, rng)?;
    let action = LowLevelAction::from_head_indices(&actions)?;
    Ok(Decision { obs, actions, mask, log_prob, value: pass.values[0], action })
}

/// Sample one action from a standalone policy without recording anything.
pub fn policy_action(
    net: &PolicyNet,
    world: &WorldState,
    id: AircraftId,
    rng: &mut ChaCha8Rng,
) -> Result<LowLevelAction, TrainError> {
    Ok(decide(world, id, |o| net.forward(o), rng)?.action)
}

fn close_trajectory(
    mode: Mode,
    world: &WorldState,
    id: AircraftId,
    mut traj: Trajectory,
) -> Result<Option<Trajectory>, TrainError> {
    let Some(last) = traj.steps.last_mut() else {
        return Ok(None);
    };
    last.done = true;
    match mode {
        Mode::Attack => {
            let craft = world.aircraft(id)?;
            last.reward = reward_attack(
                craft.aircraft_type.spec().cannon_capacity,
                craft.cannon_remaining,
                !craft.alive,
            )?;
        }
        Mode::Defend => {
            let (destroyed, friendly_kill) = defend_terms(world, id)?;
            last.reward = reward_defend(destroyed, friendly_kill);
        }
        // Dense reward, already written every tick.
        Mode::Engage => {}
    }
    Ok(Some(traj))
}

/// Collects whole episodes of the given mode until at least `min_steps`
/// agent decisions are recorded. Deterministic in `(scenario, seed)`.
pub fn collect_low_level(
    stack: &LowLevelPolicies,
    mode: Mode,
    scenario: &ScenarioConfig,
    opponent: &Opponent,
    min_steps: usize,
    seed: u64,
) -> Result<(RolloutBuffer, RolloutSummary), TrainError> {
    scenario.validate()?;
    let mut buffer = RolloutBuffer::default();
    let mut episode_returns = Vec::new();
    let mut episodes = 0usize;

    while buffer.len() < min_steps {
        let ep = episodes as u64;
        let mut cfg = scenario.clone();
        cfg.seed = derive_seed(seed, "episode", ep);
        let mut world = spawn_scenario(&cfg)?;

        let mut agent_rng = substream(seed, "agent-actions", ep);
        let mut opp_rng = substream(seed, "opponent-actions", ep);
        let mut random_opponent = RandomController::new(substream(seed, "opponent-actions", ep));

        let mut open: BTreeMap<AircraftId, Trajectory> = world
            .aircraft
            .iter()
            .filter(|a| a.team == Team::Agent)
            .map(|a| (a.id, Trajectory::default()))
            .collect();

        while outcome(&world) == Outcome::Ongoing {
            let mut actions = BTreeMap::new();
            let mut decided: Vec<(AircraftId, Decision)> = Vec::new();
            for id in world.living_ids() {
                if world.aircraft(id)?.team == Team::Agent {
                    let d = decide(
                        &world,
                        id,
                        |o| stack.forward_mode(mode, o),
                        &mut agent_rng,
                    )?;
                    actions.insert(id, d.action);
                    decided.push((id, d));
                } else {
                    let action = match opponent {
                        Opponent::Random => random_opponent.act(&world, id)?,
                        Opponent::Snapshot(net) => policy_action(net, &world, id, &mut opp_rng)?,
                    };
                    actions.insert(id, action);
                }
            }
            step(&mut world, &actions)?;

            for (id, d) in decided {
                let reward = match mode {
                    Mode::Engage => reward_engage(&world, id)?,
                    Mode::Attack | Mode::Defend => 0.0,
                };
                open.get_mut(&id)
                    .expect("decisions only made for open trajectories")
                    .steps
                    .push(Transition {
                        obs: d.obs,
                        actions: d.actions,
                        mask: d.mask,
                        log_prob: d.log_prob,
                        reward,
                        value: d.value,
                        done: false,
                        agent: id,
                        advantage: 0.0,
                        ret: 0.0,
                    });
            }

            let episode_over = outcome(&world) != Outcome::Ongoing;
            let to_close: Vec<AircraftId> = open
                .keys()
                .copied()
                .filter(|&id| episode_over || !world.aircraft(id).is_ok_and(|a| a.alive))
                .collect();
            for id in to_close {
                let traj = open.remove(&id).expect("listed ids are open");
                if let Some(traj) = close_trajectory(mode, &world, id, traj)? {
                    episode_returns.push(traj.steps.iter().map(|s| s.reward).sum::<f64>());
                    buffer.trajectories.push(traj);
                }
            }
            if episode_over {
                break;
            }
        }
        episodes += 1;
    }

    let mean_episode_return = if episode_returns.is_empty() {
        0.0
    } else {
        episode_returns.iter().sum::<f64>() / episode_returns.len() as f64
    };
    let env_steps = buffer.len();
    Ok((
        buffer,
        RolloutSummary { episodes, env_steps, mean_episode_return },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn stack(seed: u64) -> LowLevelPolicies {
        LowLevelPolicies::new(&mut substream(seed, "rollout-test-init", 0))
    }

    fn quiet_scenario(max_ticks: u32) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::new(2, 2, 0);
        cfg.max_ticks = max_ticks;
        cfg
    }

    #[test]
    fn two_agents_hundred_ticks_give_two_hundred_transitions() {
        let stack = stack(1);
        let (buffer, summary) = collect_low_level(
            &stack,
            Mode::Engage,
            &quiet_scenario(100),
            &Opponent::Random,
            200,
            7,
        )
        .unwrap();
        // Seed picked so nobody dies inside the first episode: both agents
        // survive all 100 ticks.
        assert_eq!(buffer.len(), 200, "expected a clean two-trajectory episode");
        assert_eq!(buffer.trajectories.len(), 2);
        for traj in &buffer.trajectories {
            assert_eq!(traj.steps.len(), 100);
            assert!(traj.steps.last().unwrap().done);
            assert!(traj.steps[..99].iter().all(|s| !s.done));
        }
        assert_eq!(summary.episodes, 1);
        assert_eq!(summary.env_steps, 200);
    }

    #[test]
    fn same_seed_collects_identical_buffers() {
        let stack = stack(2);
        let run = || {
            collect_low_level(
                &stack,
                Mode::Attack,
                &quiet_scenario(60),
                &Opponent::Random,
                150,
                11,
            )
            .unwrap()
        };
        let (a, sa) = run();
        let (b, sb) = run();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
    }

    #[test]
    fn different_seeds_differ() {
        let stack = stack(2);
        let collect = |seed| {
            collect_low_level(
                &stack,
                Mode::Engage,
                &quiet_scenario(60),
                &Opponent::Random,
                100,
                seed,
            )
            .unwrap()
            .0
        };
        assert_ne!(collect(1), collect(2));
    }

    #[test]
    fn engage_rewards_are_dense_and_in_range() {
        let stack = stack(3);
        let (buffer, _) = collect_low_level(
            &stack,
            Mode::Engage,
            &quiet_scenario(80),
            &Opponent::Random,
            300,
            13,
        )
        .unwrap();
        let mut nonzero = 0;
        for s in buffer.steps() {
            assert!((0.0..=2.0).contains(&s.reward), "engage reward {}", s.reward);
            if s.reward != 0.0 {
                nonzero += 1;
            }
        }
        assert!(nonzero > buffer.len() / 2, "engage reward should be dense");
    }

    #[test]
    fn attack_reward_lands_only_on_the_terminal_step() {
        let stack = stack(4);
        let (buffer, _) = collect_low_level(
            &stack,
            Mode::Attack,
            &quiet_scenario(60),
            &Opponent::Random,
            200,
            17,
        )
        .unwrap();
        for traj in &buffer.trajectories {
            let (last, body) = traj.steps.split_last().unwrap();
            assert!(body.iter().all(|s| s.reward == 0.0));
            assert!(
                (-1.0..=1.0).contains(&last.reward),
                "attack terminal reward {}",
                last.reward
            );
        }
    }

    #[test]
    fn defend_reward_is_terminal_and_in_range() {
        let stack = stack(5);
        let (buffer, _) = collect_low_level(
            &stack,
            Mode::Defend,
            &quiet_scenario(60),
            &Opponent::Random,
            200,
            19,
        )
        .unwrap();
        for traj in &buffer.trajectories {
            let (last, body) = traj.steps.split_last().unwrap();
            assert!(body.iter().all(|s| s.reward == 0.0));
            assert!((-2.0..=0.0).contains(&last.reward));
        }
    }

    #[test]
    fn snapshot_opponents_play() {
        let stack = stack(6);
        let frozen = stack.export_mode(Mode::Engage);
        let (buffer, summary) = collect_low_level(
            &stack,
            Mode::Engage,
            &quiet_scenario(40),
            &Opponent::Snapshot(&frozen),
            100,
            23,
        )
        .unwrap();
        assert!(buffer.len() >= 100);
        assert!(summary.episodes >= 1);
    }

    #[test]
    fn gae_runs_on_collected_buffer() {
        let stack = stack(7);
        let (mut buffer, _) = collect_low_level(
            &stack,
            Mode::Engage,
            &quiet_scenario(40),
            &Opponent::Random,
            100,
            29,
        )
        .unwrap();
        buffer.compute_gae(0.99, 0.95).unwrap();
        for s in buffer.steps() {
            assert!(s.advantage.is_finite());
            assert!((s.ret - (s.advantage + s.value)).abs() < 1e-12);
        }
    }
}
