use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use dogfight::engine::{
    outcome, spawn_scenario, step, EpisodeLogWriter, Mode, Outcome, ScenarioConfig,
};
use dogfight::policy::{save_checkpoint, LowLevelPolicies, PolicyNet};
use dogfight::rng::{derive_seed, substream};
use dogfight::training::{policy_action, train_low_level, write_metrics_csv};

use crate::config::RunConfig;
use crate::error::CliError;

fn default_scenario() -> ScenarioConfig {
    ScenarioConfig::new(1, 1, 0)
}

pub fn run(
    mode: Mode,
    cfg: &RunConfig,
    seed: u64,
    out: &Path,
    io: &mut dyn Write,
) -> Result<(), CliError> {
    let mut ppo = cfg.ppo.clone().unwrap_or_default();
    ppo.seed = derive_seed(seed, "train-low", mode.index() as u64);
    let league = cfg.league.clone().unwrap_or_default();
    let scenario = cfg.scenario.clone().unwrap_or_else(default_scenario);

    let mut stack = LowLevelPolicies::new(&mut substream(ppo.seed, "stack-init", 0));
    let result = train_low_level(&mut stack, mode, &scenario, &ppo, &league)?;

    for s in &result.stages {
        writeln!(
            io,
            "stage {}: {} updates, {} env steps, mean return {:.6}{}",
            s.stage,
            s.updates,
            s.env_steps,
            s.mean_return,
            if s.converged { ", converged" } else { "" }
        )?;
    }
    writeln!(io, "total env steps: {}", result.env_steps)?;

    let name = mode.name();
    for (stage, net) in result.snapshots.iter().enumerate() {
        let path = out.join(format!("{name}_stage{stage}.ckpt"));
        save_checkpoint(net, &path)?;
        writeln!(io, "wrote {}", path.display())?;
    }
    let final_path = out.join(format!("{name}.ckpt"));
    save_checkpoint(&result.policy, &final_path)?;
    writeln!(io, "wrote {}", final_path.display())?;

    let metrics_path = out.join(format!("{name}_metrics.csv"));
    write_metrics_csv(&metrics_path, &result.metrics)?;
    writeln!(io, "wrote {}", metrics_path.display())?;

    let log_path = out.join(format!("{name}_episode.jsonl"));
    log_showcase_episode(&result.policy, &scenario, derive_seed(ppo.seed, "showcase", 0), &log_path)?;
    writeln!(io, "wrote {}", log_path.display())?;
    Ok(())
}

/// Plays one episode of the trained controller against itself and logs it
/// tick by tick, so the run leaves a replayable artifact behind.
fn log_showcase_episode(
    net: &PolicyNet,
    scenario: &ScenarioConfig,
    seed: u64,
    path: &Path,
) -> Result<(), CliError> {
    let mut cfg = scenario.clone();
    cfg.seed = seed;
    let mut world = spawn_scenario(&cfg)?;
    let mut writer = EpisodeLogWriter::create(path, &cfg)?;
    let mut rng = substream(seed, "showcase-actions", 0);
    let no_modes = BTreeMap::new();
    while outcome(&world) == Outcome::Ongoing {
        let ids: Vec<_> = world.living().map(|a| a.id).collect();
        let mut actions = BTreeMap::new();
        for id in ids {
            actions.insert(id, policy_action(net, &world, id, &mut rng)?);
        }
        let events = step(&mut world, &actions)?;
        writer.log_tick(&world, &actions, &no_modes, &events)?;
    }
    writer.finish()?;
    Ok(())
}
