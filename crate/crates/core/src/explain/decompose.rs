//! Reward decomposition over a windowed episode trace.
//!
//! Each option window's commander reward is attributed to whichever mode
//! the aircraft was flying that window, so an episode return splits into
//! attack, engage, and defend components that sum back to the total.
//!
//! Only commander windows count: once an aircraft is dead it takes no
//! decisions, so events its leftover rockets cause later are not part of
//! any logged return. A living aircraft with no mode assignment, on the
//! other hand, means the log is corrupt.

use serde::{Deserialize, Serialize};

use crate::engine::{reward_commander, AircraftId, Mode, Team};
use crate::training::EpisodeTrace;

use super::ExplainError;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardComponents {
    pub attack: f64,
    pub engage: f64,
    pub defend: f64,
    pub total: f64,
}

impl RewardComponents {
    pub fn component(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Attack => self.attack,
            Mode::Engage => self.engage,
            Mode::Defend => self.defend,
        }
    }

    pub fn sum(&self) -> f64 {
        self.attack + self.engage + self.defend
    }

    fn add(&mut self, mode: Mode, r: f64) {
        match mode {
            Mode::Attack => self.attack += r,
            Mode::Engage => self.engage += r,
            Mode::Defend => self.defend += r,
        }
        self.total += r;
    }
}

/// Whose rewards to attribute: the whole agent team or one aircraft.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecompositionView {
    Global,
    Local(AircraftId),
}

pub fn decompose_returns(
    trace: &EpisodeTrace,
    view: DecompositionView,
) -> Result<RewardComponents, ExplainError> {
    let agent_ids: Vec<AircraftId> = trace
        .world
        .aircraft
        .iter()
        .filter(|a| a.team == Team::Agent)
        .map(|a| a.id)
        .collect();
    if let DecompositionView::Local(id) = view {
        if !agent_ids.contains(&id) {
            return Err(ExplainError::Spec(format!(
                "aircraft {id} is not on the agent team"
            )));
        }
    }

    let mut out = RewardComponents::default();
    let mut dead = std::collections::BTreeSet::new();
    for w in &trace.windows {
        for &id in &agent_ids {
            if matches!(view, DecompositionView::Local(a) if a != id) {
                continue;
            }
            match w.modes.get(&id) {
                Some(&mode) => out.add(mode, reward_commander(&w.events, id)),
                None if !dead.contains(&id) => {
                    return Err(ExplainError::Inconsistent(format!(
                        "window {} has no mode for living aircraft {}",
                        w.window, id
                    )))
                }
                None => {}
            }
        }
        for events in &w.events {
            for kill in &events.kills {
                dead.insert(kill.victim);
            }
        }
    }
    Ok(out)
}
