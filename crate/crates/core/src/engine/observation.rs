//! Observation vectors for the low-level controllers and the commander.
//!
//! Angular features are unsigned (degrees / 180), so observations are
//! invariant under rigid transforms and reflections of the whole scene.
//! Distances are normalized by the map diameter scale
//! [`OBS_DISTANCE_NORM_KM`].

use super::spec::Team;
use super::world::{AircraftId, AircraftState, WorldState};
use super::EngineError;
use crate::geometry::{aspect_angle, ata, distance_km, Position};

/// Divisor for distance features.
pub const OBS_DISTANCE_NORM_KM: f64 = 60.0;
/// Upper bound on the commander sensing parameter m.
pub const MAX_SENSING: usize = 5;

/// Low-level layout: own block (7) + nearest-friendly block (6) + nearest-
/// opponent block (6).
pub const LOW_LEVEL_OBS_WIDTH: usize = 19;
const LOW_LEVEL_CONTACT_WIDTH: usize = 6;

/// Commander own block: type index, cannon fraction, rocket flag, speed
/// fraction, normalized position.
pub const COMMANDER_OWN_WIDTH: usize = 6;
/// Commander contact block: validity, distance, ATA, AA, type index.
pub const COMMANDER_BLOCK_WIDTH: usize = 5;

pub fn commander_obs_width(m: usize) -> usize {
    COMMANDER_OWN_WIDTH + 2 * m * COMMANDER_BLOCK_WIDTH
}

/// Angle pair (observer's ATA to target, target's ATA back, target's aspect
/// angle), read as zero if the two positions coincide.
fn angles_or_zero(observer: &AircraftState, target: &AircraftState) -> (f64, f64, f64) {
    let nose_off = ata(observer.pos, observer.heading, target.pos).unwrap_or(0.0);
    let their_nose = ata(target.pos, target.heading, observer.pos).unwrap_or(0.0);
    let aspect = aspect_angle(observer.pos, target.pos, target.heading).unwrap_or(0.0);
    (nose_off, their_nose, aspect)
}

fn low_level_contact_block(
    agent: &AircraftState,
    other: Option<&AircraftState>,
) -> [f64; LOW_LEVEL_CONTACT_WIDTH] {
    let Some(other) = other else {
        return [0.0; LOW_LEVEL_CONTACT_WIDTH];
    };
    let d = distance_km(agent.pos, other.pos).unwrap_or(0.0);
    let (nose_off, their_nose, aspect) = angles_or_zero(agent, other);
    [
        1.0,
        d / OBS_DISTANCE_NORM_KM,
        nose_off / 180.0,
        their_nose / 180.0,
        aspect / 180.0,
        f64::from(other.cannon_remaining) / f64::from(other.spec().cannon_capacity),
    ]
}

fn speed_fraction(craft: &AircraftState) -> f64 {
    let spec = craft.spec();
    (craft.speed_kn - spec.speed_min_kn) / (spec.speed_max_kn - spec.speed_min_kn)
}

/// Observation for the low-level controllers: own kinematics and weapon
/// state plus relative blocks for the nearest friendly and the nearest
/// opponent. Missing contacts leave a zero block with validity 0.
pub fn low_level_observation(
    world: &WorldState,
    agent_id: AircraftId,
) -> Result<Vec<f64>, EngineError> {
    let agent = world.aircraft(agent_id)?;
    if !agent.alive {
        return Err(EngineError::InvalidQuery(format!(
            "observation requested for dead aircraft {agent_id}"
        )));
    }
    let spec = agent.spec();
    let heading_rad = agent.heading.radians();
    let mut obs = Vec::with_capacity(LOW_LEVEL_OBS_WIDTH);
    obs.extend_from_slice(&[
        agent.pos.x / world.map_km,
        agent.pos.y / world.map_km,
        heading_rad.sin(),
        heading_rad.cos(),
        speed_fraction(agent),
        f64::from(agent.cannon_remaining) / f64::from(spec.cannon_capacity),
        if agent.rockets_remaining > 0 { 1.0 } else { 0.0 },
    ]);

    let friendly = world.nearest_of_team(agent.pos, agent.team, agent_id);
    obs.extend_from_slice(&low_level_contact_block(agent, friendly.first().copied()));
    let hostile = world.nearest_of_team(agent.pos, agent.team.opposing(), agent_id);
    obs.extend_from_slice(&low_level_contact_block(agent, hostile.first().copied()));

    debug_assert_eq!(obs.len(), LOW_LEVEL_OBS_WIDTH);
    Ok(obs)
}

/// Commander contact block from raw feature values. Exposed so synthetic
/// probes can assemble observations for poses that never occurred in a
/// rollout.
pub fn hostile_block(d_km: f64, ata_deg: f64, aa_deg: f64, type_index: f64) -> [f64; 5] {
    [
        1.0,
        d_km / OBS_DISTANCE_NORM_KM,
        ata_deg / 180.0,
        aa_deg / 180.0,
        type_index,
    ]
}

fn commander_contact_block(agent: &AircraftState, other: Option<&AircraftState>) -> [f64; 5] {
    let Some(other) = other else {
        return [0.0; 5];
    };
    let d = distance_km(agent.pos, other.pos).unwrap_or(0.0);
    let (nose_off, _, aspect) = angles_or_zero(agent, other);
    hostile_block(d, nose_off, aspect, other.aircraft_type.type_index())
}

/// The commander's description of the agent itself.
pub fn own_commander_block(
    world: &WorldState,
    agent_id: AircraftId,
) -> Result<[f64; 6], EngineError> {
    let agent = world.aircraft(agent_id)?;
    Ok([
        agent.aircraft_type.type_index(),
        f64::from(agent.cannon_remaining) / f64::from(agent.spec().cannon_capacity),
        if agent.rockets_remaining > 0 { 1.0 } else { 0.0 },
        speed_fraction(agent),
        agent.pos.x / world.map_km,
        agent.pos.y / world.map_km,
    ])
}

/// Commander observation with sensing parameter `m`: own block, then the m
/// nearest hostiles, then the m nearest friendlies, all nearest-first and
/// zero-padded.
pub fn commander_observation(
    world: &WorldState,
    agent_id: AircraftId,
    m: usize,
) -> Result<Vec<f64>, EngineError> {
    if m == 0 || m > MAX_SENSING {
        return Err(EngineError::InvalidConfig(format!(
            "sensing parameter m = {m} outside 1..={MAX_SENSING}"
        )));
    }
    let agent = world.aircraft(agent_id)?;
    if !agent.alive {
        return Err(EngineError::InvalidQuery(format!(
            "observation requested for dead aircraft {agent_id}"
        )));
    }

    let mut obs = Vec::with_capacity(commander_obs_width(m));
    obs.extend_from_slice(&own_commander_block(world, agent_id)?);
    for team in [agent.team.opposing(), agent.team] {
        let contacts = world.nearest_of_team(agent.pos, team, agent_id);
        for k in 0..m {
            obs.extend_from_slice(&commander_contact_block(agent, contacts.get(k).copied()));
        }
    }
    debug_assert_eq!(obs.len(), commander_obs_width(m));
    Ok(obs)
}

/// Nearest living hostile, if any.
pub fn nearest_hostile(world: &WorldState, agent_id: AircraftId) -> Option<AircraftId> {
    let agent = world.aircraft(agent_id).ok()?;
    world
        .nearest_of_team(agent.pos, agent.team.opposing(), agent_id)
        .first()
        .map(|a| a.id)
}

/// Mean position of living aircraft of `team`, if any.
pub fn team_centroid(world: &WorldState, team: Team) -> Option<Position> {
    let members: Vec<&AircraftState> = world.living().filter(|a| a.team == team).collect();
    if members.is_empty() {
        return None;
    }
    let n = members.len() as f64;
    let x = members.iter().map(|a| a.pos.x).sum::<f64>() / n;
    let y = members.iter().map(|a| a.pos.y).sum::<f64>() / n;
    Some(Position::new(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::world::{spawn_scenario, ScenarioConfig};
    use crate::engine::{AircraftType, Composition};
    use crate::geometry::wrap_heading;
    use approx::assert_abs_diff_eq;

    fn world_5v5(seed: u64) -> WorldState {
        spawn_scenario(&ScenarioConfig::new(5, 5, seed)).unwrap()
    }

    #[test]
    fn low_level_width_and_ammo() {
        let world = world_5v5(1);
        let obs = low_level_observation(&world, AircraftId(0)).unwrap();
        assert_eq!(obs.len(), LOW_LEVEL_OBS_WIDTH);
        assert_eq!(obs[5], 1.0); // full cannon
        assert_eq!(obs[6], 1.0); // rockets aboard
        assert_eq!(obs[7], 1.0); // friendly block valid
        assert_eq!(obs[13], 1.0); // hostile block valid
        assert!(obs.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn sole_survivor_blocks_zeroed() {
        let mut world = world_5v5(2);
        for a in world.aircraft.iter_mut().skip(1) {
            a.alive = false;
        }
        let obs = low_level_observation(&world, AircraftId(0)).unwrap();
        assert!(obs[7..19].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dead_agent_is_an_error() {
        let mut world = world_5v5(3);
        world.aircraft[0].alive = false;
        assert!(matches!(
            low_level_observation(&world, AircraftId(0)),
            Err(EngineError::InvalidQuery(_))
        ));
        assert!(matches!(
            commander_observation(&world, AircraftId(0), 3),
            Err(EngineError::InvalidQuery(_))
        ));
    }

    #[test]
    fn mirrored_scene_reads_identically() {
        // Reflect every aircraft about the vertical line x = 30 while the
        // observer sits on it heading north; unsigned features make the two
        // scenes indistinguishable.
        let place = |world: &mut WorldState, idx: usize, x: f64, y: f64, h: f64| {
            world.aircraft[idx].pos = Position::new(x, y);
            world.aircraft[idx].heading = wrap_heading(h).unwrap();
            world.aircraft[idx].heading_setpoint = world.aircraft[idx].heading;
        };
        let mut left = spawn_scenario(&ScenarioConfig::new(2, 1, 9)).unwrap();
        place(&mut left, 0, 30.0, 20.0, 0.0);
        place(&mut left, 1, 25.0, 22.0, 30.0);
        place(&mut left, 2, 32.0, 28.0, 200.0);
        let mut right = spawn_scenario(&ScenarioConfig::new(2, 1, 9)).unwrap();
        place(&mut right, 0, 30.0, 20.0, 0.0);
        place(&mut right, 1, 35.0, 22.0, 330.0);
        place(&mut right, 2, 28.0, 28.0, 160.0);

        let a = low_level_observation(&left, AircraftId(0)).unwrap();
        let b = low_level_observation(&right, AircraftId(0)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        let ca = commander_observation(&left, AircraftId(0), 2).unwrap();
        let cb = commander_observation(&right, AircraftId(0), 2).unwrap();
        for (x, y) in ca.iter().zip(&cb) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn commander_width_and_padding() {
        let world = world_5v5(4);
        for m in 1..=MAX_SENSING {
            let obs = commander_observation(&world, AircraftId(0), m).unwrap();
            assert_eq!(obs.len(), commander_obs_width(m));
        }
        assert_eq!(commander_obs_width(3), 36);

        // Only one hostile left: first hostile block valid, rest zero.
        let mut world = world_5v5(4);
        for a in world.aircraft.iter_mut().skip(6) {
            a.alive = false;
        }
        let obs = commander_observation(&world, AircraftId(0), 3).unwrap();
        let hostiles = &obs[COMMANDER_OWN_WIDTH..COMMANDER_OWN_WIDTH + 15];
        assert_eq!(hostiles[0], 1.0);
        assert!(hostiles[5..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn commander_blocks_sorted_nearest_first() {
        let world = world_5v5(6);
        let obs = commander_observation(&world, AircraftId(0), 3).unwrap();
        let d1 = obs[COMMANDER_OWN_WIDTH + 1];
        let d2 = obs[COMMANDER_OWN_WIDTH + COMMANDER_BLOCK_WIDTH + 1];
        let d3 = obs[COMMANDER_OWN_WIDTH + 2 * COMMANDER_BLOCK_WIDTH + 1];
        assert!(d1 <= d2 && d2 <= d3, "{d1} {d2} {d3}");
    }

    #[test]
    fn sensing_out_of_range_is_config_error() {
        let world = world_5v5(7);
        for m in [0usize, 6, 100] {
            assert!(matches!(
                commander_observation(&world, AircraftId(0), m),
                Err(EngineError::InvalidConfig(_))
            ));
        }
    }

    #[test]
    fn type_index_encodes_aircraft_type() {
        let mut config = ScenarioConfig::new(2, 2, 8);
        config.composition = Composition::Heterogeneous;
        let mut world = spawn_scenario(&config).unwrap();
        world.aircraft[1].aircraft_type = AircraftType::Ac2;
        world.aircraft[0].aircraft_type = AircraftType::Ac1;
        let obs = commander_observation(&world, AircraftId(0), 1).unwrap();
        assert_eq!(obs[0], 0.0);
        // Friendly block is the second contact block; its last feature is
        // the type index of aircraft 1.
        let friendly = &obs[COMMANDER_OWN_WIDTH + COMMANDER_BLOCK_WIDTH..];
        assert_eq!(friendly[4], 1.0);
    }

    #[test]
    fn probe_block_matches_real_geometry() {
        // A real contact at distance d dead ahead, facing away, must match
        // the synthetic block built from (d, 0, 0).
        let mut world = spawn_scenario(&ScenarioConfig::new(1, 1, 10)).unwrap();
        world.aircraft[0].pos = Position::new(30.0, 20.0);
        world.aircraft[0].heading = wrap_heading(0.0).unwrap();
        world.aircraft[1].pos = Position::new(30.0, 25.0);
        world.aircraft[1].heading = wrap_heading(0.0).unwrap();
        let obs = commander_observation(&world, AircraftId(0), 1).unwrap();
        let real = &obs[COMMANDER_OWN_WIDTH..COMMANDER_OWN_WIDTH + COMMANDER_BLOCK_WIDTH];
        let synth = hostile_block(5.0, 0.0, 0.0, 0.0);
        for (x, y) in real.iter().zip(&synth) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }
}
