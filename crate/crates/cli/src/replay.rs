//! Replays an episode log: parses it, re-simulates it to verify the
//! recorded states still fall out of the engine bit for bit, then prints a
//! per-tick timeline. Parse failures exit 2, replay mismatches exit 3, a
//! missing file exits 4.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use dogfight::engine::{
    read_episode_log, replay_episode_log, AircraftId, Composition, EngineError, Mode, Team,
    TickRecord,
};

use crate::error::CliError;

pub fn run(log_path: &Path, io: &mut dyn Write) -> Result<(), CliError> {
    if !log_path.exists() {
        return Err(CliError::MissingArtifact(format!(
            "episode log {} not found",
            log_path.display()
        )));
    }
    let (header, records) = read_episode_log(log_path)?;
    replay_episode_log(log_path).map_err(|e| match e {
        EngineError::LogIntegrity(m) => CliError::Divergence(format!("replay mismatch: {m}")),
        other => other.into(),
    })?;

    let cfg = &header.config;
    let composition = match cfg.composition {
        Composition::HomogeneousAc1 => "homogeneous AC1",
        Composition::Heterogeneous => "heterogeneous",
    };
    writeln!(
        io,
        "scenario: {} agents vs {} opponents ({composition}), {:.0}x{:.0} km map, seed {}, cap {} ticks",
        cfg.n_agents, cfg.n_opponents, cfg.map_km, cfg.map_km, cfg.seed, cfg.max_ticks
    )?;
    if records.is_empty() {
        return Ok(());
    }

    let mut modes: BTreeMap<AircraftId, Mode> = BTreeMap::new();
    for record in &records {
        writeln!(io, "tick {}: {}", record.tick, tick_notes(record, &mut modes))?;
    }

    let last = records.last().expect("records checked non-empty");
    let agents = last.aircraft.iter().filter(|a| a.team == Team::Agent && a.alive).count();
    let opponents = last.aircraft.iter().filter(|a| a.team == Team::Opponent && a.alive).count();
    let summary = match (agents, opponents) {
        (0, 0) => "draw (mutual destruction)",
        (_, 0) => "agents win",
        (0, _) => "opponents win",
        _ if last.tick >= cfg.max_ticks => "draw (tick cap)",
        _ => "ongoing (log ends early)",
    };
    writeln!(io, "outcome: {summary} after {} ticks", last.tick)?;
    Ok(())
}

fn tick_notes(record: &TickRecord, modes: &mut BTreeMap<AircraftId, Mode>) -> String {
    let mut notes: Vec<String> = Vec::new();
    for (&id, &mode) in &record.modes {
        if modes.get(&id) != Some(&mode) {
            notes.push(format!("aircraft {} to {}", id.0, mode.name()));
            modes.insert(id, mode);
        }
    }
    for s in &record.events.cannon_shots {
        notes.push(format!(
            "aircraft {} fires at aircraft {} ({})",
            s.shooter.0,
            s.target.0,
            if s.hit { "hit" } else { "miss" }
        ));
    }
    for h in &record.events.rocket_hits {
        notes.push(format!(
            "rocket from aircraft {} strikes aircraft {}",
            h.shooter.0, h.target.0
        ));
    }
    for f in &record.events.friendly_fire_hits {
        notes.push(format!(
            "friendly fire: aircraft {} hits aircraft {}",
            f.shooter.0, f.victim.0
        ));
    }
    for k in &record.events.kills {
        notes.push(format!(
            "aircraft {} destroyed by aircraft {}",
            k.victim.0, k.killer.0
        ));
    }
    if notes.is_empty() {
        "-".to_string()
    } else {
        notes.join("; ")
    }
}
