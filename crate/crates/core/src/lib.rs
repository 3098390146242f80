//! Deterministic 2D multi-aircraft dogfight simulation with a hierarchical
//! policy stack, an embedded PPO trainer with league self-play, and an
//! explanation harness for commander activation analysis and reward
//! decomposition.
//!
//! The crate is organized bottom-up:
//!
//! - [`geometry`]: planar combat geometry (headings, ATA/AA angles, WEZ tests)
//! - [`engine`]: the simulation environment (kinematics, weapons,
//!   observations, rewards, options, episode logs)
//! - [`policy`]: feed-forward policy/value networks with multi-head
//!   categorical outputs, action masking, and checkpoint persistence
//! - [`training`]: PPO with GAE, league self-play for the low-level
//!   controllers, commander training over frozen controllers, evaluation
//! - [`explain`]: global/local activation-frequency sweeps, grid
//!   aggregation, reward decomposition, and decomposed Q estimators
//!
//! All randomness flows from explicit seeds through [`rng`] sub-streams, so
//! every simulation, training run, and sweep is reproducible bit-for-bit.

pub mod engine;
pub mod explain;
pub mod geometry;
pub mod policy;
pub mod rng;
pub mod training;

pub use engine::{
    AircraftId, AircraftState, AircraftType, LowLevelAction, Mode, Outcome, ScenarioConfig,
    StepEvents, Team, WorldState,
};
pub use geometry::{HeadingDeg, Position};
pub use policy::{ActionMask, PolicyNet, PolicyRole};
