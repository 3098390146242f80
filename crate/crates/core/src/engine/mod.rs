//! The simulation environment: world state, aircraft kinematics, weapons and
//! hit resolution, observations, rewards, option execution, and episode
//! outcomes.
//!
//! A [`WorldState`] is advanced one tick at a time by [`step`] with one
//! [`LowLevelAction`] per living aircraft. All stochastic effects (spawn
//! placement, cannon hit rolls) draw from the world's own seeded generator,
//! so a `(ScenarioConfig, action sequence)` pair replays bit-identically.

mod action;
mod log;
mod observation;
mod options;
mod outcome;
mod reward;
mod spec;
mod world;

pub use action::{apply_heading_command, map_velocity, LowLevelAction};
pub use log::{
    read_episode_log, replay_episode_log, EpisodeLogHeader, EpisodeLogWriter, TickRecord,
};
pub use observation::{
    commander_obs_width, commander_observation, hostile_block, low_level_observation,
    nearest_hostile, own_commander_block, team_centroid, COMMANDER_BLOCK_WIDTH,
    COMMANDER_OWN_WIDTH, LOW_LEVEL_OBS_WIDTH, MAX_SENSING, OBS_DISTANCE_NORM_KM,
};
pub use options::{
    run_option, Controller, Mode, NoopController, OptionCommand, OptionTermination,
    PursuitController, RandomController, OPTION_WINDOW_TICKS,
};
pub use outcome::{outcome, Outcome};
pub use reward::{defend_terms, reward_attack, reward_commander, reward_defend, reward_engage};
pub use spec::{AircraftSpec, AircraftType, Team, AC1_SPEC, AC2_SPEC, KNOTS_TO_KM_PER_S};
pub use world::{
    spawn_scenario, step, AircraftId, AircraftState, CannonShot, Composition, FriendlyFireHit,
    Kill, RocketHit, RocketState, ScenarioConfig, StepEvents, WorldState,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("invalid command: {0}")]
    InvalidCommand(String),
    #[error("episode already over (tick {0} reached the tick cap)")]
    EpisodeOver(u32),
    #[error("log integrity: {0}")]
    LogIntegrity(String),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
