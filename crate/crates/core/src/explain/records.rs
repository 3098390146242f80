//! Activation records and their CSV serialization.
//!
//! One record per commander decision. Global-sweep records carry the cell
//! coordinates of the episode they came from; local-sweep records carry
//! the synthetic nearest-enemy features the probe was built around.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{AircraftId, AircraftType, Mode};
use crate::explain::ExplainError;

/// Behavior of the opposing team during a global-sweep episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpponentStrategy {
    /// Every opponent flies the frozen attack controller.
    Attack,
    /// Every opponent flies the frozen engage controller.
    Engage,
    /// Every opponent flies the frozen defend controller.
    Defend,
    /// Each opponent is dealt a uniform-random fixed mode at spawn.
    Mixed,
}

impl OpponentStrategy {
    pub const ALL: [OpponentStrategy; 4] = [
        OpponentStrategy::Attack,
        OpponentStrategy::Engage,
        OpponentStrategy::Defend,
        OpponentStrategy::Mixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpponentStrategy::Attack => "attack",
            OpponentStrategy::Engage => "engage",
            OpponentStrategy::Defend => "defend",
            OpponentStrategy::Mixed => "mixed",
        }
    }
}

impl std::fmt::Display for OpponentStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One commander decision logged during a global-sweep episode.
///
/// `step` is the option-window index within the episode, not the tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalRecord {
    pub strategy: OpponentStrategy,
    pub difference: i64,
    pub m: usize,
    pub episode: u64,
    pub step: u64,
    pub agent: AircraftId,
    #[serde(rename = "type")]
    pub aircraft_type: AircraftType,
    pub mode: Mode,
}

/// One commander decision on a synthetic observation from the local sweep.
///
/// `d` is in kilometres; `ata` and `aa` are unsigned degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalRecord {
    pub d: f64,
    pub ata: f64,
    pub aa: f64,
    pub episode: u64,
    pub step: u64,
    pub agent: AircraftId,
    #[serde(rename = "type")]
    pub aircraft_type: AircraftType,
    pub mode: Mode,
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), ExplainError> {
    let mut writer = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, ExplainError> {
    if !path.exists() {
        return Err(ExplainError::MissingArtifact(path.display().to_string()));
    }
    let mut reader = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    reader.deserialize().collect::<Result<Vec<T>, _>>().map_err(ExplainError::from)
}

pub fn write_global_records(path: &Path, rows: &[GlobalRecord]) -> Result<(), ExplainError> {
    write_csv(path, rows)
}

pub fn read_global_records(path: &Path) -> Result<Vec<GlobalRecord>, ExplainError> {
    read_csv(path)
}

pub fn write_local_records(path: &Path, rows: &[LocalRecord]) -> Result<(), ExplainError> {
    write_csv(path, rows)
}

pub fn read_local_records(path: &Path) -> Result<Vec<LocalRecord>, ExplainError> {
    read_csv(path)
}
