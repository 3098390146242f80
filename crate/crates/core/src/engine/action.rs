//! Low-level control actions and their mappings onto the flight envelope.

use serde::{Deserialize, Serialize};

use super::spec::AircraftSpec;
use super::EngineError;
use crate::geometry::{wrap_heading, HeadingDeg};

/// One tick of control input for a single aircraft: a relative heading step,
/// a velocity index, and the two weapon triggers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LowLevelAction {
    /// Relative heading command in 15-degree increments, `-6..=6`.
    pub heading_step: i8,
    /// Velocity index `0..=8`, mapped linearly onto the type's speed range.
    pub speed_index: u8,
    /// Cannon trigger.
    pub fire_cannon: bool,
    /// Rocket trigger (no-op for aircraft without rockets).
    pub fire_rocket: bool,
}

impl LowLevelAction {
    /// Neutral action: hold heading, mid velocity, no fire.
    pub fn neutral() -> Self {
        Self {
            heading_step: 0,
            speed_index: 4,
            fire_cannon: false,
            fire_rocket: false,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(-6..=6).contains(&self.heading_step) {
            return Err(EngineError::InvalidAction(format!(
                "heading step {} out of range -6..=6",
                self.heading_step
            )));
        }
        if self.speed_index > 8 {
            return Err(EngineError::InvalidAction(format!(
                "speed index {} out of range 0..=8",
                self.speed_index
            )));
        }
        Ok(())
    }

    /// Builds an action from the categorical head indices sampled by a
    /// policy: heads are (heading 13-way, velocity 9-way, cannon 2-way,
    /// rocket 2-way).
    pub fn from_head_indices(idx: &[usize]) -> Result<Self, EngineError> {
        if idx.len() != 4 {
            return Err(EngineError::InvalidAction(format!(
                "expected 4 head indices, got {}",
                idx.len()
            )));
        }
        let action = Self {
            heading_step: idx[0] as i8 - 6,
            speed_index: idx[1] as u8,
            fire_cannon: idx[2] == 1,
            fire_rocket: idx[3] == 1,
        };
        action.validate()?;
        Ok(action)
    }
}

/// New heading setpoint for a relative heading command: 15 degrees per step,
/// wrapped into `[0, 360)`. The turn itself is realized over subsequent
/// ticks under the type's turn-rate cap.
pub fn apply_heading_command(current: HeadingDeg, h: i8) -> Result<HeadingDeg, EngineError> {
    if !(-6..=6).contains(&h) {
        return Err(EngineError::InvalidAction(format!(
            "heading step {h} out of range -6..=6"
        )));
    }
    Ok(wrap_heading(current.degrees() + 15.0 * f64::from(h))?)
}

/// Linear velocity mapping: index 0 is the type's minimum speed, 8 its
/// maximum.
pub fn map_velocity(v: u8, spec: &AircraftSpec) -> Result<f64, EngineError> {
    if v > 8 {
        return Err(EngineError::InvalidAction(format!(
            "speed index {v} out of range 0..=8"
        )));
    }
    Ok(spec.speed_min_kn + (f64::from(v) / 8.0) * (spec.speed_max_kn - spec.speed_min_kn))
}
