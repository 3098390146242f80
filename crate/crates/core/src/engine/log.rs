//! Episode logs: one JSON header line, then one JSON record per tick.
//!
//! A log carries everything needed to re-simulate the episode (scenario
//! config with seed, plus the actions), and the states and events the
//! original run produced, so replay can be verified byte-for-byte.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::action::LowLevelAction;
use super::options::Mode;
use super::world::{
    spawn_scenario, step, AircraftId, AircraftState, ScenarioConfig, StepEvents, WorldState,
};
use super::EngineError;

pub const EPISODE_LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeLogHeader {
    pub version: u32,
    pub config: ScenarioConfig,
}

/// State of the world after one tick, with the actions that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TickRecord {
    /// Tick counter after the step (first record has tick 1).
    pub tick: u32,
    pub actions: BTreeMap<AircraftId, LowLevelAction>,
    /// Active option per agent, when a commander was in charge.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub modes: BTreeMap<AircraftId, Mode>,
    pub aircraft: Vec<AircraftState>,
    pub events: StepEvents,
}

pub struct EpisodeLogWriter {
    out: BufWriter<File>,
}

impl EpisodeLogWriter {
    pub fn create(path: &Path, config: &ScenarioConfig) -> Result<Self, EngineError> {
        let mut out = BufWriter::new(File::create(path)?);
        let header = EpisodeLogHeader { version: EPISODE_LOG_VERSION, config: config.clone() };
        serde_json::to_writer(&mut out, &header)
            .map_err(|e| EngineError::LogIntegrity(e.to_string()))?;
        out.write_all(b"\n")?;
        Ok(Self { out })
    }

    /// Records one tick: the actions fed to [`step`], the resulting world,
    /// and the events the step returned.
    pub fn log_tick(
        &mut self,
        world: &WorldState,
        actions: &BTreeMap<AircraftId, LowLevelAction>,
        modes: &BTreeMap<AircraftId, Mode>,
        events: &StepEvents,
    ) -> Result<(), EngineError> {
        let record = TickRecord {
            tick: world.tick,
            actions: actions.clone(),
            modes: modes.clone(),
            aircraft: world.aircraft.clone(),
            events: events.clone(),
        };
        serde_json::to_writer(&mut self.out, &record)
            .map_err(|e| EngineError::LogIntegrity(e.to_string()))?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), EngineError> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn read_episode_log(
    path: &Path,
) -> Result<(EpisodeLogHeader, Vec<TickRecord>), EngineError> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| EngineError::LogIntegrity("empty log file".into()))??;
    let header: EpisodeLogHeader = serde_json::from_str(&header_line)
        .map_err(|e| EngineError::LogIntegrity(format!("bad header: {e}")))?;
    if header.version != EPISODE_LOG_VERSION {
        return Err(EngineError::LogIntegrity(format!(
            "unsupported log version {}",
            header.version
        )));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TickRecord = serde_json::from_str(&line)
            .map_err(|e| EngineError::LogIntegrity(format!("bad record at line {}: {e}", i + 2)))?;
        records.push(record);
    }
    Ok((header, records))
}

/// Re-simulates a log from its config and actions and checks every tick
/// reproduces the recorded states and events exactly. Returns the header
/// and the verified records.
pub fn replay_episode_log(
    path: &Path,
) -> Result<(EpisodeLogHeader, Vec<TickRecord>), EngineError> {
    let (header, records) = read_episode_log(path)?;
    let mut world = spawn_scenario(&header.config)?;
    for record in &records {
        let events = step(&mut world, &record.actions)?;
        if world.tick != record.tick {
            return Err(EngineError::LogIntegrity(format!(
                "tick mismatch: simulated {} vs logged {}",
                world.tick, record.tick
            )));
        }
        let recomputed = TickRecord {
            tick: world.tick,
            actions: record.actions.clone(),
            modes: record.modes.clone(),
            aircraft: world.aircraft.clone(),
            events,
        };
        let logged_line = serde_json::to_string(record)
            .map_err(|e| EngineError::LogIntegrity(e.to_string()))?;
        let replayed_line = serde_json::to_string(&recomputed)
            .map_err(|e| EngineError::LogIntegrity(e.to_string()))?;
        if logged_line != replayed_line {
            return Err(EngineError::LogIntegrity(format!(
                "replay diverged at tick {}",
                record.tick
            )));
        }
    }
    Ok((header, records))
}
