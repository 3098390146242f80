//! Head-to-head evaluation over many independent episodes.

use rayon::prelude::*;

use crate::engine::{Outcome, ScenarioConfig};
use crate::rng::derive_seed;

use super::hierarchy::{run_team_episode, TeamBehavior};
use super::TrainError;

/// Outcome tallies from the agent team's point of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalReport {
    pub episodes: usize,
    pub wins: usize,
    pub losses: usize,
    pub draws: usize,
}

impl EvalReport {
    pub fn win_fraction(&self) -> f64 {
        self.wins as f64 / self.episodes as f64
    }

    pub fn loss_fraction(&self) -> f64 {
        self.losses as f64 / self.episodes as f64
    }

    pub fn draw_fraction(&self) -> f64 {
        self.draws as f64 / self.episodes as f64
    }
}

/// Plays `episodes` independent episodes in parallel. Episode seeds are
/// derived from `seed` by index, so the report is identical regardless of
/// how the work is scheduled.
pub fn evaluate(
    scenario: &ScenarioConfig,
    agents: TeamBehavior,
    opponents: TeamBehavior,
    episodes: usize,
    seed: u64,
) -> Result<EvalReport, TrainError> {
    if episodes == 0 {
        return Err(TrainError::Config("episodes must be at least 1".into()));
    }
    scenario.validate()?;
    let outcomes: Vec<Outcome> = (0..episodes)
        .into_par_iter()
        .map(|i| {
            run_team_episode(scenario, agents, opponents, derive_seed(seed, "eval", i as u64))
                .map(|trace| trace.outcome)
        })
        .collect::<Result<_, _>>()?;

    let mut report = EvalReport { episodes, wins: 0, losses: 0, draws: 0 };
    for outcome in outcomes {
        match outcome {
            Outcome::AgentsWin => report.wins += 1,
            Outcome::OpponentsWin => report.losses += 1,
            // A finished episode is never Ongoing.
            Outcome::Draw | Outcome::Ongoing => report.draws += 1,
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Mode;
    use crate::policy::LowLevelPolicies;
    use crate::rng::substream;
    use crate::training::hierarchy::FrozenControllers;

    fn scenario(n: usize, max_ticks: u32) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::new(n, n, 0);
        cfg.max_ticks = max_ticks;
        cfg
    }

    #[test]
    fn do_nothing_teams_always_draw() {
        let report = evaluate(
            &scenario(1, 60),
            TeamBehavior::Noop,
            TeamBehavior::Noop,
            100,
            3,
        )
        .unwrap();
        assert_eq!(report.draws, 100);
        assert_eq!(report.wins + report.losses, 0);
        assert_eq!(report.draw_fraction(), 1.0);
    }

    #[test]
    fn pursuit_crushes_a_straight_flier() {
        let report = evaluate(
            &scenario(1, 500),
            TeamBehavior::Pursuit,
            TeamBehavior::Noop,
            40,
            5,
        )
        .unwrap();
        assert!(
            report.win_fraction() > 0.9,
            "pursuit only won {}/{}",
            report.wins,
            report.episodes
        );
    }

    #[test]
    fn fractions_partition_unity() {
        let report = evaluate(
            &scenario(2, 200),
            TeamBehavior::Random,
            TeamBehavior::Random,
            60,
            7,
        )
        .unwrap();
        assert_eq!(report.wins + report.losses + report.draws, report.episodes);
        let total = report.win_fraction() + report.loss_fraction() + report.draw_fraction();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evaluation_is_deterministic() {
        let stack = LowLevelPolicies::new(&mut substream(1, "eval-test", 0));
        let ctrl = FrozenControllers::from_stack(&stack);
        let run = || {
            evaluate(
                &scenario(2, 100),
                TeamBehavior::Fixed { controllers: &ctrl, mode: Mode::Attack },
                TeamBehavior::Random,
                16,
                11,
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn zero_episodes_rejected() {
        assert!(matches!(
            evaluate(&scenario(1, 10), TeamBehavior::Noop, TeamBehavior::Noop, 0, 1),
            Err(TrainError::Config(_))
        ));
    }
}
