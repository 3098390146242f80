use std::io::Write;
use std::path::Path;

use dogfight::engine::{Composition, ScenarioConfig, MAX_SENSING};
use dogfight::policy::save_checkpoint;
use dogfight::rng::derive_seed;
use dogfight::training::{train_commander, write_metrics_csv};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::teams::load_controllers;

fn default_scenario() -> ScenarioConfig {
    ScenarioConfig::new(3, 3, 0)
}

pub fn composition_tag(composition: Composition) -> &'static str {
    match composition {
        Composition::HomogeneousAc1 => "homo",
        Composition::Heterogeneous => "hetero",
    }
}

pub fn run(
    m: usize,
    composition: Composition,
    controllers_dir: &Path,
    cfg: &RunConfig,
    seed: u64,
    out: &Path,
    io: &mut dyn Write,
) -> Result<(), CliError> {
    if m == 0 || m > MAX_SENSING {
        return Err(CliError::Config(format!(
            "sensing capability m must be in 1..={MAX_SENSING}, got {m}"
        )));
    }
    let controllers = load_controllers(controllers_dir)?;

    let mut ppo = cfg.ppo.clone().unwrap_or_default();
    ppo.seed = derive_seed(seed, "train-commander", m as u64);
    let mut scenario = cfg.scenario.clone().unwrap_or_else(default_scenario);
    scenario.composition = composition;
    let max_updates = cfg.commander.clone().unwrap_or_default().max_updates;

    let result = train_commander(m, &controllers, &scenario, &ppo, max_updates)?;
    writeln!(
        io,
        "trained commander m={m} ({}): {} updates, {} decisions",
        composition_tag(composition),
        result.metrics.len(),
        result.decisions
    )?;

    let tag = format!("commander_m{m}_{}", composition_tag(composition));
    let ckpt_path = out.join(format!("{tag}.ckpt"));
    save_checkpoint(&result.policy, &ckpt_path)?;
    writeln!(io, "wrote {}", ckpt_path.display())?;

    let metrics_path = out.join(format!("{tag}_metrics.csv"));
    write_metrics_csv(&metrics_path, &result.metrics)?;
    writeln!(io, "wrote {}", metrics_path.display())?;
    Ok(())
}
