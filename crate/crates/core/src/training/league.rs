//! League curriculum for the low-level controllers.
//!
//! Stage 0 trains against uniformly random opponents. Each later stage
//! freezes the policy trained so far and fields it as the opponent,
//! continuing training until the episode-return moving average plateaus or
//! the stage hits its update cap.

use crate::engine::{Mode, ScenarioConfig};
use crate::policy::{LowLevelPolicies, PolicyNet};
use crate::rng::{derive_seed, substream};

use super::config::{LeagueConfig, PpoConfig};
use super::metrics::MetricsRow;
use super::optim::Adam;
use super::ppo::{ppo_update, ModeNet};
use super::rollout::{collect_low_level, Opponent};
use super::TrainError;

/// Plateau detector over per-update mean episode returns: once the mean of
/// the latest `window` values improves on the mean of the window before it
/// by less than `threshold` (relative), the stage has converged. Needs two
/// full windows of history before it can fire.
#[derive(Debug, Clone)]
pub struct ConvergenceTracker {
    window: usize,
    threshold: f64,
    history: Vec<f64>,
}

impl ConvergenceTracker {
    pub fn new(window: usize, threshold: f64) -> Self {
        Self { window, threshold, history: Vec::new() }
    }

    /// Record one update's mean return; true once converged.
    pub fn push(&mut self, value: f64) -> bool {
        self.history.push(value);
        self.converged()
    }

    pub fn converged(&self) -> bool {
        let w = self.window;
        if self.history.len() < 2 * w {
            return false;
        }
        let recent: f64 = self.history[self.history.len() - w..].iter().sum::<f64>() / w as f64;
        let previous: f64 = self.history[self.history.len() - 2 * w..self.history.len() - w]
            .iter()
            .sum::<f64>()
            / w as f64;
        recent - previous < self.threshold * previous.abs().max(1e-8)
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }
}

/// What one league stage did.
#[derive(Debug, Clone, PartialEq)]
pub struct LeagueStage {
    pub stage: usize,
    pub updates: usize,
    pub env_steps: u64,
    pub converged: bool,
    pub mean_return: f64,
}

#[derive(Debug, Clone)]
pub struct LowTrainResult {
    /// The trained mode exported as a standalone network.
    pub policy: PolicyNet,
    /// Frozen export at the end of each stage, in stage order. The last
    /// snapshot equals `policy`.
    pub snapshots: Vec<PolicyNet>,
    pub stages: Vec<LeagueStage>,
    pub metrics: Vec<MetricsRow>,
    pub env_steps: u64,
}

/// Trains one mode of the shared stack through the league schedule. All
/// agents share this single parameter set during collection; opponents in
/// stage k > 0 run the frozen snapshot exported at the end of stage k - 1.
pub fn train_low_level(
    stack: &mut LowLevelPolicies,
    mode: Mode,
    scenario: &ScenarioConfig,
    ppo: &PpoConfig,
    league: &LeagueConfig,
) -> Result<LowTrainResult, TrainError> {
    ppo.validate()?;
    league.validate()?;
    scenario.validate()?;

    let mut metrics = Vec::new();
    let mut stages = Vec::new();
    let mut env_steps_total = 0u64;
    let mut update_index = 0u64;
    let mut adam = Adam::new(ppo.learning_rate, stack.mode_param_count(mode));
    let mut snapshots: Vec<PolicyNet> = Vec::new();

    for stage in 0..league.stages {
        let mut tracker = ConvergenceTracker::new(league.convergence_window, league.convergence_threshold);
        let mut updates = 0usize;
        let mut stage_steps = 0u64;
        let mut mean_return = 0.0;
        let mut converged = false;

        while updates < league.max_updates_per_stage && env_steps_total < ppo.total_env_steps {
            let opponent = match snapshots.last() {
                None => Opponent::Random,
                Some(net) => Opponent::Snapshot(net),
            };
            let collect_seed = derive_seed(ppo.seed, "collect", update_index);
            let (mut buffer, summary) =
                collect_low_level(stack, mode, scenario, &opponent, ppo.rollout_steps, collect_seed)?;
            buffer.compute_gae(ppo.gamma, ppo.gae_lambda)?;

            let mut update_rng = substream(ppo.seed, "update", update_index);
            let mut net = ModeNet { stack, mode };
            let stats = ppo_update(&mut net, &buffer, ppo, &mut adam, &mut update_rng)?;

            env_steps_total += summary.env_steps as u64;
            stage_steps += summary.env_steps as u64;
            mean_return = summary.mean_episode_return;
            metrics.push(MetricsRow {
                update: update_index,
                stage,
                env_steps: env_steps_total,
                mean_return: summary.mean_episode_return,
                policy_loss: stats.policy_loss,
                value_loss: stats.value_loss,
                entropy: stats.entropy,
                approx_kl: stats.approx_kl,
                clip_fraction: stats.clip_fraction,
            });
            update_index += 1;
            updates += 1;
            if tracker.push(summary.mean_episode_return) {
                converged = true;
                break;
            }
        }

        stages.push(LeagueStage {
            stage,
            updates,
            env_steps: stage_steps,
            converged,
            mean_return,
        });
        snapshots.push(stack.export_mode(mode));
        if env_steps_total >= ppo.total_env_steps {
            break;
        }
    }

    Ok(LowTrainResult {
        policy: stack.export_mode(mode),
        snapshots,
        stages,
        metrics,
        env_steps: env_steps_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn tracker_waits_for_two_windows() {
        let mut t = ConvergenceTracker::new(5, 0.01);
        for _ in 0..9 {
            assert!(!t.push(1.0));
        }
        // Tenth flat sample completes two windows of identical means.
        assert!(t.push(1.0));
    }

    #[test]
    fn tracker_rides_out_a_ramp_then_fires_on_plateau() {
        let mut t = ConvergenceTracker::new(10, 0.01);
        let mut converged_at = None;
        for i in 0..200 {
            let v = if i < 100 { i as f64 } else { 100.0 };
            if t.push(v) {
                converged_at = Some(i);
                break;
            }
        }
        let at = converged_at.expect("plateau must converge");
        // Needs most of a window of plateau before the rolling means flatten.
        assert!(at >= 100, "converged during the ramp at {at}");
        assert!(at <= 120, "converged too late at {at}");
    }

    #[test]
    fn tracker_fires_on_decline() {
        let mut t = ConvergenceTracker::new(5, 0.01);
        let mut fired = false;
        for i in 0..20 {
            if t.push(-(i as f64)) {
                fired = true;
                break;
            }
        }
        assert!(fired, "a falling return is a plateau for our purposes");
    }

    #[test]
    fn tracker_tolerates_noise_on_a_plateau() {
        let mut t = ConvergenceTracker::new(10, 0.01);
        let mut fired = false;
        for i in 0..40 {
            let v = 5.0 + 0.001 * (i as f64).sin();
            if t.push(v) {
                fired = true;
                break;
            }
        }
        assert!(fired);
    }

    #[test]
    fn tracker_keeps_going_while_improving() {
        let mut t = ConvergenceTracker::new(10, 0.01);
        for i in 0..60 {
            // 5% growth per update stays above the 1% threshold.
            assert!(!t.push(1.05f64.powi(i)), "fired on steady growth at {i}");
        }
    }

    fn tiny_ppo(seed: u64) -> PpoConfig {
        PpoConfig {
            rollout_steps: 48,
            total_env_steps: 400,
            minibatch_size: 32,
            epochs: 2,
            seed,
            ..PpoConfig::default()
        }
    }

    fn tiny_league() -> LeagueConfig {
        LeagueConfig {
            stages: 2,
            convergence_window: 2,
            convergence_threshold: 0.01,
            max_updates_per_stage: 3,
        }
    }

    fn tiny_scenario() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::new(1, 1, 0);
        cfg.max_ticks = 40;
        cfg
    }

    #[test]
    fn league_runs_both_stages_and_logs_metrics() {
        let mut stack = LowLevelPolicies::new(&mut substream(60, "league-test", 0));
        let result = train_low_level(
            &mut stack,
            Mode::Engage,
            &tiny_scenario(),
            &tiny_ppo(1),
            &tiny_league(),
        )
        .unwrap();
        assert_eq!(result.stages.len(), 2);
        assert_eq!(result.snapshots.len(), 2);
        assert_eq!(result.snapshots.last().unwrap(), &result.policy);
        assert!(result.stages.iter().all(|s| s.updates >= 1));
        let total_updates: usize = result.stages.iter().map(|s| s.updates).sum();
        assert_eq!(result.metrics.len(), total_updates);
        assert_eq!(result.metrics[0].stage, 0);
        assert_eq!(result.metrics.last().unwrap().stage, 1);
        assert!(result.env_steps > 0);
        // Metrics carry finite losses.
        for row in &result.metrics {
            assert!(row.policy_loss.is_finite());
            assert!(row.value_loss.is_finite());
            assert!(row.entropy > 0.0);
        }
    }

    #[test]
    fn training_is_deterministic_given_seed() {
        let run = || {
            let mut stack = LowLevelPolicies::new(&mut substream(61, "league-test", 0));
            train_low_level(
                &mut stack,
                Mode::Attack,
                &tiny_scenario(),
                &tiny_ppo(2),
                &tiny_league(),
            )
            .unwrap();
            stack
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
    }

    #[test]
    fn budget_caps_total_steps() {
        let mut stack = LowLevelPolicies::new(&mut substream(62, "league-test", 0));
        let ppo = PpoConfig { total_env_steps: 50, ..tiny_ppo(3) };
        let result = train_low_level(
            &mut stack,
            Mode::Engage,
            &tiny_scenario(),
            &ppo,
            &tiny_league(),
        )
        .unwrap();
        // One collection can overshoot the budget, but no further update
        // starts after it is spent.
        let total_updates: usize = result.stages.iter().map(|s| s.updates).sum();
        assert_eq!(total_updates, 1);
    }

    #[test]
    fn training_moves_only_the_trained_branch_and_trunk() {
        let mut stack = LowLevelPolicies::new(&mut substream(63, "league-test", 0));
        let attack_heads_before = stack.branches[Mode::Attack.index()].heads.clone();
        let defend_heads_before = stack.branches[Mode::Defend.index()].heads.clone();
        let trunk_before = stack.trunk.clone();
        train_low_level(
            &mut stack,
            Mode::Engage,
            &tiny_scenario(),
            &tiny_ppo(4),
            &tiny_league(),
        )
        .unwrap();
        assert_eq!(stack.branches[Mode::Attack.index()].heads, attack_heads_before);
        assert_eq!(stack.branches[Mode::Defend.index()].heads, defend_heads_before);
        assert_ne!(stack.trunk, trunk_before, "shared trunk should move");
    }
}
