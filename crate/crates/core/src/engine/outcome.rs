use serde::{Deserialize, Serialize};

use super::spec::Team;
use super::world::WorldState;

/// Episode result from the agent team's perspective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ongoing,
    /// All opponents destroyed with at least one agent surviving.
    AgentsWin,
    /// All agents destroyed with at least one opponent surviving.
    OpponentsWin,
    /// Mutual destruction, or the tick cap elapsed with both teams standing.
    Draw,
}

pub fn outcome(world: &WorldState) -> Outcome {
    let agents = world.team_alive(Team::Agent);
    let opponents = world.team_alive(Team::Opponent);
    match (agents, opponents) {
        (0, 0) => Outcome::Draw,
        (_, 0) => Outcome::AgentsWin,
        (0, _) => Outcome::OpponentsWin,
        _ if world.tick >= world.max_ticks => Outcome::Draw,
        _ => Outcome::Ongoing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{spawn_scenario, ScenarioConfig};

    #[test]
    fn outcome_rules() {
        let config = ScenarioConfig::new(2, 2, 3);
        let mut world = spawn_scenario(&config).unwrap();
        assert_eq!(outcome(&world), Outcome::Ongoing);

        world.aircraft[2].alive = false;
        world.aircraft[3].alive = false;
        assert_eq!(outcome(&world), Outcome::AgentsWin);

        world.aircraft[2].alive = true;
        world.aircraft[0].alive = false;
        world.aircraft[1].alive = false;
        assert_eq!(outcome(&world), Outcome::OpponentsWin);

        world.aircraft[2].alive = false;
        assert_eq!(outcome(&world), Outcome::Draw);

        let mut world = spawn_scenario(&config).unwrap();
        world.tick = world.max_ticks;
        assert_eq!(outcome(&world), Outcome::Draw);
    }
}
