//! Per-type aircraft performance envelopes.

use serde::{Deserialize, Serialize};

/// 1 knot in km/s (1.852 km/h / 3600).
pub const KNOTS_TO_KM_PER_S: f64 = 1.852 / 3600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Team {
    Agent,
    Opponent,
}

impl Team {
    pub fn opposing(self) -> Team {
        match self {
            Team::Agent => Team::Opponent,
            Team::Opponent => Team::Agent,
        }
    }
}

/// The two airframe types. AC1 is agile and carries rockets; AC2 turns
/// slower but has a longer-ranged, more accurate cannon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AircraftType {
    Ac1,
    Ac2,
}

impl AircraftType {
    pub fn spec(self) -> &'static AircraftSpec {
        match self {
            AircraftType::Ac1 => &AC1_SPEC,
            AircraftType::Ac2 => &AC2_SPEC,
        }
    }

    /// Observation encoding: AC1 -> 0, AC2 -> 1.
    pub fn type_index(self) -> f64 {
        match self {
            AircraftType::Ac1 => 0.0,
            AircraftType::Ac2 => 1.0,
        }
    }
}

/// Performance envelope of one aircraft type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AircraftSpec {
    pub type_id: AircraftType,
    /// Maximum turn rate in degrees per second.
    pub turn_rate_deg_s: f64,
    pub speed_min_kn: f64,
    pub speed_max_kn: f64,
    /// Half-angle of the weapon engagement cone in degrees.
    pub wez_half_angle_deg: f64,
    /// Maximum cannon range in kilometres.
    pub wez_range_km: f64,
    /// Probability that a cannon round fired inside the WEZ destroys the
    /// target.
    pub hit_probability: f64,
    /// Cannon magazine size in rounds.
    pub cannon_capacity: u32,
    /// Rockets carried at spawn (AC1 only).
    pub rocket_count: u32,
}

pub const AC1_SPEC: AircraftSpec = AircraftSpec {
    type_id: AircraftType::Ac1,
    turn_rate_deg_s: 5.0,
    speed_min_kn: 100.0,
    speed_max_kn: 900.0,
    wez_half_angle_deg: 10.0,
    wez_range_km: 2.0,
    hit_probability: 0.70,
    cannon_capacity: 50,
    rocket_count: 4,
};

pub const AC2_SPEC: AircraftSpec = AircraftSpec {
    type_id: AircraftType::Ac2,
    turn_rate_deg_s: 3.6,
    speed_min_kn: 100.0,
    speed_max_kn: 600.0,
    wez_half_angle_deg: 7.0,
    wez_range_km: 4.5,
    hit_probability: 0.85,
    cannon_capacity: 50,
    rocket_count: 0,
};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        assert_eq!(AC1_SPEC.turn_rate_deg_s, 5.0);
        assert_eq!(AC1_SPEC.speed_min_kn, 100.0);
        assert_eq!(AC1_SPEC.speed_max_kn, 900.0);
        assert_eq!(AC1_SPEC.wez_half_angle_deg, 10.0);
        assert_eq!(AC1_SPEC.wez_range_km, 2.0);
        assert_eq!(AC1_SPEC.hit_probability, 0.70);
        assert_eq!(AC2_SPEC.turn_rate_deg_s, 3.6);
        assert_eq!(AC2_SPEC.speed_max_kn, 600.0);
        assert_eq!(AC2_SPEC.wez_half_angle_deg, 7.0);
        assert_eq!(AC2_SPEC.wez_range_km, 4.5);
        assert_eq!(AC2_SPEC.hit_probability, 0.85);
        assert_eq!(AC2_SPEC.rocket_count, 0);
    }

    #[test]
    fn knot_conversion() {
        // 900 kn over one second is 0.463 km.
        assert!((900.0 * KNOTS_TO_KM_PER_S - 0.463).abs() < 1e-12);
    }
}
