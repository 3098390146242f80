use std::io::Write;
use std::path::Path;

use dogfight::engine::ScenarioConfig;
use dogfight::rng::derive_seed;
use dogfight::training::evaluate;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::teams::TeamSpec;

fn default_scenario() -> ScenarioConfig {
    ScenarioConfig::new(1, 1, 0)
}

pub fn run(
    agents_spec: &str,
    opponents_spec: &str,
    episodes: usize,
    cfg: &RunConfig,
    seed: u64,
    out: &Path,
    io: &mut dyn Write,
) -> Result<(), CliError> {
    if episodes == 0 {
        return Err(CliError::Config("--episodes must be at least 1".into()));
    }
    let agents = TeamSpec::parse(agents_spec)?.load()?;
    let opponents = TeamSpec::parse(opponents_spec)?.load()?;
    let scenario = cfg.scenario.clone().unwrap_or_else(default_scenario);

    let eval_seed = derive_seed(seed, "eval", 0);
    let report = evaluate(&scenario, agents.behavior(), opponents.behavior(), episodes, eval_seed)?;

    let json = serde_json::json!({
        "agents": agents_spec,
        "opponents": opponents_spec,
        "episodes": report.episodes,
        "seed": eval_seed,
        "wins": report.wins,
        "losses": report.losses,
        "draws": report.draws,
        "win_fraction": report.win_fraction(),
        "loss_fraction": report.loss_fraction(),
        "draw_fraction": report.draw_fraction(),
    });
    let text = serde_json::to_string_pretty(&json).expect("report serializes");
    writeln!(io, "{text}")?;

    let path = out.join("eval.json");
    std::fs::write(&path, format!("{text}\n"))?;
    writeln!(io, "wrote {}", path.display())?;
    Ok(())
}
