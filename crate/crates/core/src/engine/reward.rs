//! Mode and commander reward functions.
//!
//! Attack and defend rewards are terminal (scored once when the agent dies
//! or the episode ends); the engage reward is dense per tick; the commander
//! reward is scored per option window.

use super::world::{AircraftId, StepEvents, WorldState};
use super::EngineError;
use crate::geometry::{aspect_angle, ata};

/// Ammunition-expenditure reward with a death penalty, in [-1, 1].
pub fn reward_attack(c_max: u32, c_rem: u32, destroyed: bool) -> Result<f64, EngineError> {
    if c_max == 0 || c_rem > c_max {
        return Err(EngineError::InvalidState(format!(
            "cannon counts out of range: {c_rem}/{c_max}"
        )));
    }
    let spent = f64::from(c_max - c_rem) / f64::from(c_max);
    Ok(spent + if destroyed { -1.0 } else { 0.0 })
}

/// Dense pursuit-geometry reward against the nearest living opponent, in
/// [0, 2]. Maximal in a tail chase: the agent sits behind the opponent
/// (the opponent's antenna train angle to the agent is 180 degrees) while
/// the opponent faces away (aspect angle 0). Zero when the agent is dead or
/// no opponent remains.
pub fn reward_engage(world: &WorldState, agent_id: AircraftId) -> Result<f64, EngineError> {
    let agent = world.aircraft(agent_id)?;
    if !agent.alive {
        return Ok(0.0);
    }
    let hostiles = world.nearest_of_team(agent.pos, agent.team.opposing(), agent_id);
    let Some(opp) = hostiles.first() else {
        return Ok(0.0);
    };
    if opp.pos == agent.pos {
        // Map-edge clamping can collocate the pair exactly; both angles
        // read zero there, which scores the range midpoint.
        return Ok(1.0);
    }
    let alpha_ata = ata(opp.pos, opp.heading, agent.pos)? / 180.0;
    let alpha_aa = 1.0 - aspect_angle(agent.pos, opp.pos, opp.heading)? / 180.0;
    Ok(alpha_ata + alpha_aa)
}

/// Survival reward, in [-2, 0]: -1 for getting destroyed, -1 for having
/// destroyed a friendly aircraft.
pub fn reward_defend(destroyed: bool, caused_friendly_kill: bool) -> f64 {
    let mut r = 0.0;
    if destroyed {
        r -= 1.0;
    }
    if caused_friendly_kill {
        r -= 1.0;
    }
    r
}

/// Commander reward over one option window: +1 per opponent this agent
/// killed, -1 if the agent itself was destroyed.
pub fn reward_commander(events_in_window: &[StepEvents], agent_id: AircraftId) -> f64 {
    let mut r = 0.0;
    for events in events_in_window {
        for kill in &events.kills {
            if kill.killer == agent_id {
                let friendly = events
                    .friendly_fire_hits
                    .iter()
                    .any(|ff| ff.shooter == agent_id && ff.victim == kill.victim);
                if !friendly {
                    r += 1.0;
                }
            }
            if kill.victim == agent_id {
                r -= 1.0;
            }
        }
    }
    r
}

/// Convenience for terminal defend scoring straight off the world.
pub fn defend_terms(world: &WorldState, agent_id: AircraftId) -> Result<(bool, bool), EngineError> {
    let agent = world.aircraft(agent_id)?;
    Ok((!agent.alive, agent.friendly_kills > 0))
}
