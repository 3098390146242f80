//! Planar combat geometry.
//!
//! Convention: headings are degrees in `[0, 360)`, measured clockwise from
//! north (+y), so the unit heading vector is `(sin h, cos h)`. Positions are
//! kilometres east/north. All angles returned by [`ata`] and
//! [`aspect_angle`] are unsigned degrees in `[0, 180]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::AircraftSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("degenerate geometry: observer and target positions coincide")]
    DegenerateGeometry,
}

/// Planar position in kilometres (x east, y north).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// A heading in degrees, always normalized to `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HeadingDeg(f64);

impl HeadingDeg {
    /// Normalizes an arbitrary finite angle into `[0, 360)`.
    pub fn new(raw: f64) -> Result<Self, GeometryError> {
        if !raw.is_finite() {
            return Err(GeometryError::NonFinite("heading"));
        }
        let mut v = raw % 360.0;
        if v < 0.0 {
            v += 360.0;
        }
        // raw values like -1e-14 round up to exactly 360.0 after the shift
        if v >= 360.0 {
            v = 0.0;
        }
        Ok(Self(v))
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }

    /// Unit vector (x east, y north) for this heading.
    pub fn unit_vector(self) -> (f64, f64) {
        let r = self.radians();
        (r.sin(), r.cos())
    }

    /// Signed shortest rotation from `self` to `other`, in `(-180, 180]`.
    pub fn signed_delta_to(self, other: HeadingDeg) -> f64 {
        let mut d = (other.0 - self.0) % 360.0;
        if d > 180.0 {
            d -= 360.0;
        } else if d <= -180.0 {
            d += 360.0;
        }
        d
    }
}

/// Normalizes `raw` degrees into `[0, 360)`.
pub fn wrap_heading(raw: f64) -> Result<HeadingDeg, GeometryError> {
    HeadingDeg::new(raw)
}

/// Euclidean distance in kilometres.
pub fn distance_km(a: Position, b: Position) -> Result<f64, GeometryError> {
    if !a.is_finite() || !b.is_finite() {
        return Err(GeometryError::NonFinite("position"));
    }
    Ok((a.x - b.x).hypot(a.y - b.y))
}

fn los(observer: Position, target: Position) -> Result<(f64, f64), GeometryError> {
    if !observer.is_finite() || !target.is_finite() {
        return Err(GeometryError::NonFinite("position"));
    }
    let dx = target.x - observer.x;
    let dy = target.y - observer.y;
    if dx == 0.0 && dy == 0.0 {
        return Err(GeometryError::DegenerateGeometry);
    }
    Ok((dx, dy))
}

/// Unsigned angle in degrees between a direction vector and a line of sight.
///
/// Computed as `atan2(|cross|, dot)`, which stays well-conditioned near 0
/// and 180 degrees where an arccos formulation loses precision.
fn unsigned_angle_deg(dir: (f64, f64), los: (f64, f64)) -> f64 {
    let dot = dir.0 * los.0 + dir.1 * los.1;
    let cross = dir.0 * los.1 - dir.1 * los.0;
    cross.abs().atan2(dot).to_degrees()
}

/// Antenna Train Angle: angle between the observer's heading and the line of
/// sight observer -> target. 0 means the observer points straight at the
/// target, 180 means it faces directly away.
pub fn ata(
    observer_pos: Position,
    observer_heading: HeadingDeg,
    target_pos: Position,
) -> Result<f64, GeometryError> {
    let los = los(observer_pos, target_pos)?;
    Ok(unsigned_angle_deg(observer_heading.unit_vector(), los))
}

/// Aspect Angle: angle between the line of sight observer -> target and the
/// target's heading. 0 when the target flees directly away from the
/// observer, 180 when the target faces the observer head-on.
pub fn aspect_angle(
    observer_pos: Position,
    target_pos: Position,
    target_heading: HeadingDeg,
) -> Result<f64, GeometryError> {
    let los = los(observer_pos, target_pos)?;
    Ok(unsigned_angle_deg(target_heading.unit_vector(), los))
}

/// Signed bearing from the observer's heading to the target, in
/// `(-180, 180]`; positive means the target is to the right.
pub fn signed_bearing_deg(
    observer_pos: Position,
    observer_heading: HeadingDeg,
    target_pos: Position,
) -> Result<f64, GeometryError> {
    let (dx, dy) = los(observer_pos, target_pos)?;
    let los_heading = dx.atan2(dy).to_degrees();
    let mut d = los_heading - observer_heading.degrees();
    d %= 360.0;
    if d > 180.0 {
        d -= 360.0;
    } else if d <= -180.0 {
        d += 360.0;
    }
    Ok(d)
}

/// Weapon engagement test: the target is inside the shooter's WEZ when it is
/// within cannon range and within the half-angle cone around the shooter's
/// nose.
pub fn in_wez(
    shooter_pos: Position,
    shooter_heading: HeadingDeg,
    spec: &AircraftSpec,
    target_pos: Position,
) -> Result<bool, GeometryError> {
    let d = distance_km(shooter_pos, target_pos)?;
    if d > spec.wez_range_km {
        return Ok(false);
    }
    let angle = ata(shooter_pos, shooter_heading, target_pos)?;
    Ok(angle <= spec.wez_half_angle_deg)
}
