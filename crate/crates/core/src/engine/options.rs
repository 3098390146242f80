//! Temporally extended option execution.
//!
//! A commander decision activates one low-level controller per agent for a
//! fixed window of ticks; the option terminates early if the agent dies or
//! the episode ends.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::action::LowLevelAction;
use super::outcome::{outcome, Outcome};
use super::world::{step, AircraftId, StepEvents, WorldState};
use super::EngineError;
use crate::geometry::{distance_km, signed_bearing_deg};

/// Ticks a low-level option runs before control returns to the commander.
pub const OPTION_WINDOW_TICKS: u32 = 20;

/// The three low-level control modes a commander can activate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Attack,
    Engage,
    Defend,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Attack, Mode::Engage, Mode::Defend];

    pub fn index(self) -> usize {
        match self {
            Mode::Attack => 0,
            Mode::Engage => 1,
            Mode::Defend => 2,
        }
    }

    pub fn from_index(index: usize) -> Result<Mode, EngineError> {
        Mode::ALL
            .get(index)
            .copied()
            .ok_or_else(|| EngineError::InvalidCommand(format!("mode index {index} out of range")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Attack => "attack",
            Mode::Engage => "engage",
            Mode::Defend => "defend",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A commander decision for one agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionCommand {
    pub mode: Mode,
}

/// Why an option stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionTermination {
    WindowElapsed,
    AgentDeath,
    EpisodeEnd,
}

/// Anything that can pick a low-level action for an aircraft.
pub trait Controller {
    fn act(
        &mut self,
        world: &WorldState,
        agent_id: AircraftId,
    ) -> Result<LowLevelAction, EngineError>;
}

/// Holds course and speed, never fires.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoopController;

impl Controller for NoopController {
    fn act(&mut self, _: &WorldState, _: AircraftId) -> Result<LowLevelAction, EngineError> {
        Ok(LowLevelAction::neutral())
    }
}

/// Uniform random maneuvers with occasional trigger pulls. Used as the
/// first league opponent.
#[derive(Debug, Clone)]
pub struct RandomController {
    rng: ChaCha8Rng,
}

impl RandomController {
    pub fn new(rng: ChaCha8Rng) -> Self {
        Self { rng }
    }
}

impl Controller for RandomController {
    fn act(&mut self, _: &WorldState, _: AircraftId) -> Result<LowLevelAction, EngineError> {
        Ok(LowLevelAction {
            heading_step: (self.rng.random::<u32>() % 13) as i8 - 6,
            speed_index: (self.rng.random::<u32>() % 9) as u8,
            fire_cannon: self.rng.random::<f64>() < 0.5,
            fire_rocket: self.rng.random::<f64>() < 0.1,
        })
    }
}

/// Scripted pure pursuit: turn toward the nearest hostile, run fast when
/// far, and keep the triggers held (both weapons are gate-checked by the
/// engine). A useful opponent and sanity baseline.
#[derive(Debug, Default, Clone, Copy)]
pub struct PursuitController;

impl Controller for PursuitController {
    fn act(
        &mut self,
        world: &WorldState,
        agent_id: AircraftId,
    ) -> Result<LowLevelAction, EngineError> {
        let agent = world.aircraft(agent_id)?;
        let hostiles = world.nearest_of_team(agent.pos, agent.team.opposing(), agent_id);
        let Some(target) = hostiles.first() else {
            return Ok(LowLevelAction::neutral());
        };
        let bearing = signed_bearing_deg(agent.pos, agent.heading, target.pos).unwrap_or(0.0);
        let heading_step = (bearing / 15.0).round().clamp(-6.0, 6.0) as i8;
        let d = distance_km(agent.pos, target.pos)?;
        let speed_index = if d > 2.0 * agent.spec().wez_range_km { 8 } else { 4 };
        Ok(LowLevelAction {
            heading_step,
            speed_index,
            fire_cannon: true,
            fire_rocket: true,
        })
    }
}

/// Runs `controller` for `agent_id` for up to [`OPTION_WINDOW_TICKS`] ticks
/// while `others` steers every other living aircraft. Returns the per-tick
/// events and why the option stopped.
pub fn run_option(
    world: &mut WorldState,
    agent_id: AircraftId,
    cmd: OptionCommand,
    controller: &mut dyn Controller,
    others: &mut dyn Controller,
) -> Result<(Vec<StepEvents>, OptionTermination), EngineError> {
    let _ = cmd;
    if !world.aircraft(agent_id)?.alive {
        return Err(EngineError::InvalidCommand(format!(
            "option issued to dead aircraft {agent_id}"
        )));
    }
    let mut events = Vec::new();
    for _ in 0..OPTION_WINDOW_TICKS {
        if outcome(world) != Outcome::Ongoing {
            return Ok((events, OptionTermination::EpisodeEnd));
        }
        let mut actions = std::collections::BTreeMap::new();
        for id in world.living_ids() {
            let action = if id == agent_id {
                controller.act(world, id)?
            } else {
                others.act(world, id)?
            };
            actions.insert(id, action);
        }
        events.push(step(world, &actions)?);
        if !world.aircraft(agent_id)?.alive {
            return Ok((events, OptionTermination::AgentDeath));
        }
    }
    Ok((events, OptionTermination::WindowElapsed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::world::{spawn_scenario, ScenarioConfig};
    use crate::geometry::{wrap_heading, Position};
    use crate::rng::substream;

    fn cmd() -> OptionCommand {
        OptionCommand { mode: Mode::Engage }
    }

    #[test]
    fn mode_indices_round_trip() {
        for (i, mode) in Mode::ALL.into_iter().enumerate() {
            assert_eq!(mode.index(), i);
            assert_eq!(Mode::from_index(i).unwrap(), mode);
        }
        assert!(Mode::from_index(3).is_err());
    }

    #[test]
    fn full_window_consumes_exactly_twenty_ticks() {
        let mut world = spawn_scenario(&ScenarioConfig::new(1, 1, 21)).unwrap();
        let (events, reason) = run_option(
            &mut world,
            AircraftId(0),
            cmd(),
            &mut NoopController,
            &mut NoopController,
        )
        .unwrap();
        assert_eq!(events.len(), OPTION_WINDOW_TICKS as usize);
        assert_eq!(reason, OptionTermination::WindowElapsed);
        assert_eq!(world.tick, OPTION_WINDOW_TICKS);
    }

    #[test]
    fn option_rejects_dead_agent() {
        let mut world = spawn_scenario(&ScenarioConfig::new(1, 1, 22)).unwrap();
        world.aircraft[0].alive = false;
        assert!(matches!(
            run_option(
                &mut world,
                AircraftId(0),
                cmd(),
                &mut NoopController,
                &mut NoopController,
            ),
            Err(EngineError::InvalidCommand(_))
        ));
    }

    #[test]
    fn option_ends_on_agent_death() {
        // Agent parked inside the opponent's gun envelope; the pursuit
        // opponent holds the trigger, so the agent dies in a few ticks.
        let mut world = spawn_scenario(&ScenarioConfig::new(1, 1, 23)).unwrap();
        world.aircraft[0].pos = Position::new(30.0, 21.0);
        world.aircraft[0].heading = wrap_heading(0.0).unwrap();
        world.aircraft[0].heading_setpoint = world.aircraft[0].heading;
        world.aircraft[1].pos = Position::new(30.0, 20.0);
        world.aircraft[1].heading = wrap_heading(0.0).unwrap();
        world.aircraft[1].heading_setpoint = world.aircraft[1].heading;
        let (events, reason) = run_option(
            &mut world,
            AircraftId(0),
            cmd(),
            &mut NoopController,
            &mut PursuitController,
        )
        .unwrap();
        assert_eq!(reason, OptionTermination::AgentDeath);
        assert!(!world.aircraft[0].alive);
        assert!(events.len() < OPTION_WINDOW_TICKS as usize);
        assert!(events.iter().any(|e| !e.kills.is_empty()));
    }

    #[test]
    fn option_stops_at_episode_end() {
        let mut config = ScenarioConfig::new(1, 1, 24);
        config.max_ticks = 5;
        let mut world = spawn_scenario(&config).unwrap();
        let (events, reason) = run_option(
            &mut world,
            AircraftId(0),
            cmd(),
            &mut NoopController,
            &mut NoopController,
        )
        .unwrap();
        assert_eq!(events.len(), 5);
        assert_eq!(reason, OptionTermination::EpisodeEnd);
    }

    #[test]
    fn pursuit_controller_closes_distance() {
        let mut world = spawn_scenario(&ScenarioConfig::new(1, 1, 25)).unwrap();
        let start = distance_km(world.aircraft[0].pos, world.aircraft[1].pos).unwrap();
        for _ in 0..4 {
            let _ = run_option(
                &mut world,
                AircraftId(0),
                cmd(),
                &mut PursuitController,
                &mut NoopController,
            )
            .unwrap();
            if !world.aircraft[1].alive {
                return; // caught and killed the target: good enough
            }
        }
        let end = distance_km(world.aircraft[0].pos, world.aircraft[1].pos).unwrap();
        assert!(end < start * 0.8, "pursuit failed to close: {start} -> {end}");
    }

    #[test]
    fn random_controller_is_deterministic_per_stream() {
        let mut a = RandomController::new(substream(4, "rc", 0));
        let mut b = RandomController::new(substream(4, "rc", 0));
        let world = spawn_scenario(&ScenarioConfig::new(1, 1, 26)).unwrap();
        for _ in 0..50 {
            assert_eq!(
                a.act(&world, AircraftId(0)).unwrap(),
                b.act(&world, AircraftId(0)).unwrap()
            );
        }
    }
}
