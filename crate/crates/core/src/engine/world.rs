//! World state, scenario spawning, and the per-tick transition.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::action::{apply_heading_command, map_velocity, LowLevelAction};
use super::spec::{AircraftSpec, AircraftType, Team, KNOTS_TO_KM_PER_S};
use super::EngineError;
use crate::geometry::{distance_km, in_wez, wrap_heading, HeadingDeg, Position};
use crate::rng::substream;

/// Index of an aircraft in `WorldState::aircraft` (stable for the whole
/// episode; agents first, then opponents).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct AircraftId(pub usize);

impl std::fmt::Display for AircraftId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Rocket flight model constants. The projectile pursues its locked target
/// with a capped turn rate and detonates on proximity.
pub const ROCKET_SPEED_KN: f64 = 1200.0;
pub const ROCKET_TURN_RATE_DEG_S: f64 = 12.0;
pub const ROCKET_LIFETIME_TICKS: u32 = 60;
pub const ROCKET_KILL_RADIUS_KM: f64 = 0.1;
/// Locking requires the nearest hostile within this multiple of cannon range.
pub const ROCKET_LOCK_RANGE_FACTOR: f64 = 2.0;
pub const ROCKET_LOCK_ATA_DEG: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AircraftState {
    pub id: AircraftId,
    pub team: Team,
    pub aircraft_type: AircraftType,
    pub pos: Position,
    pub heading: HeadingDeg,
    pub heading_setpoint: HeadingDeg,
    pub speed_kn: f64,
    pub cannon_remaining: u32,
    pub rockets_remaining: u32,
    pub alive: bool,
    /// Hostile kills scored by this aircraft while alive.
    pub kills: u32,
    /// Friendly aircraft destroyed by this aircraft's fire.
    pub friendly_kills: u32,
}

impl AircraftState {
    pub fn spec(&self) -> &'static AircraftSpec {
        self.aircraft_type.spec()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocketState {
    pub shooter_id: AircraftId,
    pub target_id: AircraftId,
    pub pos: Position,
    pub heading: HeadingDeg,
    pub speed_kn: f64,
    pub ticks_remaining: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CannonShot {
    pub shooter: AircraftId,
    pub target: AircraftId,
    pub hit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RocketHit {
    pub shooter: AircraftId,
    pub target: AircraftId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Kill {
    pub victim: AircraftId,
    pub killer: AircraftId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FriendlyFireHit {
    pub shooter: AircraftId,
    pub victim: AircraftId,
}

/// Everything that happened during one tick.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepEvents {
    pub cannon_shots: Vec<CannonShot>,
    pub rocket_hits: Vec<RocketHit>,
    pub kills: Vec<Kill>,
    pub friendly_fire_hits: Vec<FriendlyFireHit>,
}

impl StepEvents {
    pub fn is_empty(&self) -> bool {
        self.cannon_shots.is_empty()
            && self.rocket_hits.is_empty()
            && self.kills.is_empty()
            && self.friendly_fire_hits.is_empty()
    }
}

/// Team composition of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Composition {
    /// All aircraft are AC1.
    HomogeneousAc1,
    /// Random types per aircraft, with at least one of each type per team
    /// whenever the team has two or more aircraft.
    Heterogeneous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_agents: usize,
    pub n_opponents: usize,
    #[serde(default = "default_composition")]
    pub composition: Composition,
    #[serde(default = "default_map_km")]
    pub map_km: f64,
    #[serde(default = "default_max_ticks")]
    pub max_ticks: u32,
    #[serde(default = "default_dt_s")]
    pub dt_s: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_composition() -> Composition {
    Composition::HomogeneousAc1
}
fn default_map_km() -> f64 {
    60.0
}
fn default_max_ticks() -> u32 {
    500
}
fn default_dt_s() -> f64 {
    1.0
}

impl ScenarioConfig {
    pub fn new(n_agents: usize, n_opponents: usize, seed: u64) -> Self {
        Self {
            n_agents,
            n_opponents,
            composition: default_composition(),
            map_km: default_map_km(),
            max_ticks: default_max_ticks(),
            dt_s: default_dt_s(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.n_agents == 0 || self.n_opponents == 0 {
            return Err(EngineError::InvalidConfig(
                "each team needs at least one aircraft".into(),
            ));
        }
        if !(self.map_km.is_finite() && self.map_km > 0.0) {
            return Err(EngineError::InvalidConfig("map size must be positive".into()));
        }
        if self.max_ticks == 0 {
            return Err(EngineError::InvalidConfig("max_ticks must be positive".into()));
        }
        if !(self.dt_s.is_finite() && self.dt_s > 0.0) {
            return Err(EngineError::InvalidConfig("dt must be positive".into()));
        }
        Ok(())
    }
}

/// Full simulation state. One instance is single-writer; run as many
/// independent instances as needed in parallel, each with its own stream.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub tick: u32,
    pub aircraft: Vec<AircraftState>,
    pub rockets: Vec<RocketState>,
    pub map_km: f64,
    pub max_ticks: u32,
    pub dt_s: f64,
    pub(crate) rng: ChaCha8Rng,
}

impl WorldState {
    pub fn aircraft(&self, id: AircraftId) -> Result<&AircraftState, EngineError> {
        self.aircraft
            .get(id.0)
            .ok_or_else(|| EngineError::InvalidQuery(format!("unknown aircraft {id}")))
    }

    pub fn aircraft_mut(&mut self, id: AircraftId) -> Result<&mut AircraftState, EngineError> {
        self.aircraft
            .get_mut(id.0)
            .ok_or_else(|| EngineError::InvalidQuery(format!("unknown aircraft {id}")))
    }

    pub fn living(&self) -> impl Iterator<Item = &AircraftState> {
        self.aircraft.iter().filter(|a| a.alive)
    }

    pub fn living_ids(&self) -> Vec<AircraftId> {
        self.living().map(|a| a.id).collect()
    }

    pub fn team_alive(&self, team: Team) -> usize {
        self.living().filter(|a| a.team == team).count()
    }

    /// Living aircraft of `team` sorted by distance from `from` (ties broken
    /// by id), excluding `exclude`.
    pub fn nearest_of_team(
        &self,
        from: Position,
        team: Team,
        exclude: AircraftId,
    ) -> Vec<&AircraftState> {
        let mut v: Vec<&AircraftState> = self
            .living()
            .filter(|a| a.team == team && a.id != exclude)
            .collect();
        v.sort_by(|a, b| {
            let da = distance_km(from, a.pos).unwrap_or(f64::INFINITY);
            let db = distance_km(from, b.pos).unwrap_or(f64::INFINITY);
            da.partial_cmp(&db).unwrap().then(a.id.cmp(&b.id))
        });
        v
    }
}

fn draw_team_types(
    rng: &mut ChaCha8Rng,
    n: usize,
    composition: Composition,
) -> Vec<AircraftType> {
    match composition {
        Composition::HomogeneousAc1 => vec![AircraftType::Ac1; n],
        Composition::Heterogeneous => loop {
            let types: Vec<AircraftType> = (0..n)
                .map(|_| {
                    if rng.random::<f64>() < 0.5 {
                        AircraftType::Ac1
                    } else {
                        AircraftType::Ac2
                    }
                })
                .collect();
            if n < 2 {
                return types;
            }
            if types.contains(&AircraftType::Ac1) && types.contains(&AircraftType::Ac2) {
                return types;
            }
        },
    }
}

/// Creates the initial world for a scenario. Teams spawn in opposing bands
/// (agents in the southern quarter, opponents in the northern quarter) with
/// uniform random positions and headings within 45 degrees of facing the
/// enemy band, full ammunition, and tick 0.
pub fn spawn_scenario(config: &ScenarioConfig) -> Result<WorldState, EngineError> {
    config.validate()?;
    let mut rng = substream(config.seed, "spawn", 0);

    let mut aircraft = Vec::with_capacity(config.n_agents + config.n_opponents);
    let band = config.map_km / 4.0;
    for (team, n) in [(Team::Agent, config.n_agents), (Team::Opponent, config.n_opponents)] {
        let types = draw_team_types(&mut rng, n, config.composition);
        for aircraft_type in types {
            let x = rng.random::<f64>() * config.map_km;
            let (y, base_heading) = match team {
                Team::Agent => (rng.random::<f64>() * band, 0.0),
                Team::Opponent => (config.map_km - rng.random::<f64>() * band, 180.0),
            };
            let heading =
                wrap_heading(base_heading + (rng.random::<f64>() * 90.0 - 45.0))?;
            let spec = aircraft_type.spec();
            aircraft.push(AircraftState {
                id: AircraftId(aircraft.len()),
                team,
                aircraft_type,
                pos: Position::new(x, y),
                heading,
                heading_setpoint: heading,
                speed_kn: map_velocity(4, spec)?,
                cannon_remaining: spec.cannon_capacity,
                rockets_remaining: spec.rocket_count,
                alive: true,
                kills: 0,
                friendly_kills: 0,
            });
        }
    }

    Ok(WorldState {
        tick: 0,
        aircraft,
        rockets: Vec::new(),
        map_km: config.map_km,
        max_ticks: config.max_ticks,
        dt_s: config.dt_s,
        rng: substream(config.seed, "engine", 0),
    })
}

/// Advances the world by one tick.
///
/// Fixed resolution order (all loops in ascending aircraft id): command
/// application, aircraft kinematics, in-flight rocket pursuit and
/// detonation, cannon fire, rocket launches. Kills apply immediately, so an
/// aircraft destroyed earlier in the tick neither fires nor is targeted
/// later in it.
pub fn step(
    world: &mut WorldState,
    actions: &BTreeMap<AircraftId, LowLevelAction>,
) -> Result<StepEvents, EngineError> {
    if world.tick >= world.max_ticks {
        return Err(EngineError::EpisodeOver(world.tick));
    }
    for id in actions.keys() {
        let a = world.aircraft(*id)?;
        if !a.alive {
            return Err(EngineError::InvalidAction(format!(
                "action supplied for dead aircraft {id}"
            )));
        }
    }
    for a in world.aircraft.iter().filter(|a| a.alive) {
        if !actions.contains_key(&a.id) {
            return Err(EngineError::InvalidAction(format!(
                "missing action for living aircraft {}",
                a.id
            )));
        }
    }

    let mut events = StepEvents::default();
    let dt = world.dt_s;

    // Command application.
    let mut cannon_intents = Vec::new();
    let mut rocket_intents = Vec::new();
    for i in 0..world.aircraft.len() {
        let id = world.aircraft[i].id;
        let Some(action) = actions.get(&id) else { continue };
        action.validate()?;
        let craft = &mut world.aircraft[i];
        craft.heading_setpoint = apply_heading_command(craft.heading, action.heading_step)?;
        craft.speed_kn = map_velocity(action.speed_index, craft.spec())?;
        if action.fire_cannon {
            cannon_intents.push(id);
        }
        if action.fire_rocket {
            rocket_intents.push(id);
        }
    }

    // Kinematics: rotate toward the setpoint under the turn-rate cap, then
    // integrate, clamping to the map with heading reflection at the edge.
    for craft in world.aircraft.iter_mut().filter(|a| a.alive) {
        let max_turn = craft.spec().turn_rate_deg_s * dt;
        let delta = craft.heading.signed_delta_to(craft.heading_setpoint);
        let turn = delta.clamp(-max_turn, max_turn);
        craft.heading = wrap_heading(craft.heading.degrees() + turn)?;

        let (ux, uy) = craft.heading.unit_vector();
        let dist = craft.speed_kn * KNOTS_TO_KM_PER_S * dt;
        let mut x = craft.pos.x + ux * dist;
        let mut y = craft.pos.y + uy * dist;
        let mut h = craft.heading.degrees();
        if x < 0.0 || x > world.map_km {
            x = x.clamp(0.0, world.map_km);
            h = -h;
        }
        if y < 0.0 || y > world.map_km {
            y = y.clamp(0.0, world.map_km);
            h = 180.0 - h;
        }
        craft.pos = Position::new(x, y);
        if h != craft.heading.degrees() {
            craft.heading = wrap_heading(h)?;
            craft.heading_setpoint = craft.heading;
        }
    }

    advance_rockets(world, &mut events)?;

    for shooter in cannon_intents {
        resolve_cannon(world, shooter, &mut events)?;
    }

    for shooter in rocket_intents {
        launch_rocket(world, shooter)?;
    }

    world.tick += 1;
    Ok(events)
}

/// Distance from point `p` to the segment `a`-`b`.
fn point_segment_distance(p: Position, a: Position, b: Position) -> f64 {
    let abx = b.x - a.x;
    let aby = b.y - a.y;
    let len2 = abx * abx + aby * aby;
    if len2 == 0.0 {
        return (p.x - a.x).hypot(p.y - a.y);
    }
    let t = (((p.x - a.x) * abx + (p.y - a.y) * aby) / len2).clamp(0.0, 1.0);
    (p.x - (a.x + t * abx)).hypot(p.y - (a.y + t * aby))
}

fn advance_rockets(world: &mut WorldState, events: &mut StepEvents) -> Result<(), EngineError> {
    let dt = world.dt_s;
    let mut rockets = std::mem::take(&mut world.rockets);
    let mut kept = Vec::with_capacity(rockets.len());
    for rocket in rockets.iter_mut() {
        let target_alive = world.aircraft(rocket.target_id)?.alive;
        if !target_alive {
            // Stale target: drop without an event.
            continue;
        }
        let target_pos = world.aircraft(rocket.target_id)?.pos;
        let bearing = crate::geometry::signed_bearing_deg(rocket.pos, rocket.heading, target_pos);
        if let Ok(delta) = bearing {
            let max_turn = ROCKET_TURN_RATE_DEG_S * dt;
            rocket.heading =
                wrap_heading(rocket.heading.degrees() + delta.clamp(-max_turn, max_turn))?;
        }
        let (ux, uy) = rocket.heading.unit_vector();
        let travel = rocket.speed_kn * KNOTS_TO_KM_PER_S * dt;
        let from = rocket.pos;
        let to = Position::new(from.x + ux * travel, from.y + uy * travel);
        rocket.pos = to;

        if point_segment_distance(target_pos, from, to) <= ROCKET_KILL_RADIUS_KM {
            let victim = rocket.target_id;
            let killer = rocket.shooter_id;
            world.aircraft_mut(victim)?.alive = false;
            events.rocket_hits.push(RocketHit { shooter: killer, target: victim });
            events.kills.push(Kill { victim, killer });
            // Rockets only lock hostiles; credit the shooter if still alive
            // (dead aircraft state stays frozen).
            let shooter = world.aircraft_mut(killer)?;
            if shooter.alive {
                shooter.kills += 1;
            }
            continue;
        }

        rocket.ticks_remaining -= 1;
        if rocket.ticks_remaining > 0 {
            kept.push(rocket.clone());
        }
    }
    rockets.clear();
    world.rockets = kept;
    Ok(())
}

/// Resolves one cannon trigger pull. The trigger is gated: if no aircraft is
/// inside the shooter's WEZ no round is expended. Otherwise one round goes
/// at the nearest in-WEZ aircraft, friend or foe, and destroys it with the
/// type's hit probability.
pub(crate) fn resolve_cannon(
    world: &mut WorldState,
    shooter_id: AircraftId,
    events: &mut StepEvents,
) -> Result<(), EngineError> {
    let shooter = world.aircraft(shooter_id)?;
    if !shooter.alive || shooter.cannon_remaining == 0 {
        return Ok(());
    }
    let spec = shooter.spec();
    let (pos, heading) = (shooter.pos, shooter.heading);

    let mut target: Option<(f64, AircraftId)> = None;
    for other in world.living() {
        if other.id == shooter_id {
            continue;
        }
        // Map-edge clamping can leave two aircraft on the same exact point;
        // a collocated target counts as point-blank inside the WEZ, where
        // the cone angle is undefined.
        let d = distance_km(pos, other.pos)?;
        if d == 0.0 || in_wez(pos, heading, spec, other.pos)? {
            let better = match target {
                None => true,
                Some((best, best_id)) => d < best || (d == best && other.id < best_id),
            };
            if better {
                target = Some((d, other.id));
            }
        }
    }
    let Some((_, target_id)) = target else { return Ok(()) };

    world.aircraft_mut(shooter_id)?.cannon_remaining -= 1;
    let hit = world.rng.random::<f64>() < spec.hit_probability;
    events.cannon_shots.push(CannonShot { shooter: shooter_id, target: target_id, hit });
    if hit {
        let same_team = world.aircraft(target_id)?.team == world.aircraft(shooter_id)?.team;
        world.aircraft_mut(target_id)?.alive = false;
        events.kills.push(Kill { victim: target_id, killer: shooter_id });
        if same_team {
            events
                .friendly_fire_hits
                .push(FriendlyFireHit { shooter: shooter_id, victim: target_id });
            world.aircraft_mut(shooter_id)?.friendly_kills += 1;
        } else {
            world.aircraft_mut(shooter_id)?.kills += 1;
        }
    }
    Ok(())
}

/// Attempts a rocket launch. Requires remaining rockets and a lock: the
/// nearest living hostile within `ROCKET_LOCK_RANGE_FACTOR` times cannon
/// range and within `ROCKET_LOCK_ATA_DEG` of the nose. Anything else is a
/// silent no-op.
fn launch_rocket(world: &mut WorldState, shooter_id: AircraftId) -> Result<(), EngineError> {
    let shooter = world.aircraft(shooter_id)?;
    if !shooter.alive || shooter.rockets_remaining == 0 {
        return Ok(());
    }
    let spec = shooter.spec();
    let (pos, heading, team) = (shooter.pos, shooter.heading, shooter.team);

    let hostiles = world.nearest_of_team(pos, team.opposing(), shooter_id);
    let Some(nearest) = hostiles.first() else { return Ok(()) };
    let d = distance_km(pos, nearest.pos)?;
    if d > ROCKET_LOCK_RANGE_FACTOR * spec.wez_range_km {
        return Ok(());
    }
    // Collocated hostile: no line of sight to measure, treat as locked.
    let angle = if d == 0.0 { 0.0 } else { crate::geometry::ata(pos, heading, nearest.pos)? };
    if angle > ROCKET_LOCK_ATA_DEG {
        return Ok(());
    }
    let target_id = nearest.id;
    world.aircraft_mut(shooter_id)?.rockets_remaining -= 1;
    world.rockets.push(RocketState {
        shooter_id,
        target_id,
        pos,
        heading,
        speed_kn: ROCKET_SPEED_KN,
        ticks_remaining: ROCKET_LIFETIME_TICKS,
    });
    Ok(())
}
