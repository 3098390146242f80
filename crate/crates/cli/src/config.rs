//! One JSON file configures every command. Sections are optional and fall
//! back to their defaults; unknown keys anywhere are rejected before any
//! work starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dogfight::engine::ScenarioConfig;
use dogfight::explain::{GlobalSweepSpec, LocalSweepSpec};
use dogfight::training::{LeagueConfig, PpoConfig};

use crate::error::CliError;

/// Default output directory when neither `--out` nor the config names one.
pub const OUT_DIR_ENV: &str = "DOGFIGHT_OUT_DIR";

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Root seed. Each command derives its own named substream from this,
    /// overriding any seed fields inside the sections, so a single value
    /// pins every artifact of a run.
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub scenario: Option<ScenarioConfig>,
    pub ppo: Option<PpoConfig>,
    pub league: Option<LeagueConfig>,
    pub commander: Option<CommanderSection>,
    pub global_sweep: Option<GlobalSweepSpec>,
    pub local_sweep: Option<LocalSweepSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CommanderSection {
    /// PPO updates spent on commander training.
    pub max_updates: usize,
}

impl Default for CommanderSection {
    fn default() -> Self {
        CommanderSection { max_updates: 200 }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        if !path.exists() {
            return Err(CliError::Config(format!(
                "config file {} not found",
                path.display()
            )));
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))
    }
}

/// Flag beats config beats zero.
pub fn resolve_seed(flag: Option<u64>, cfg: &RunConfig) -> u64 {
    flag.or(cfg.seed).unwrap_or(0)
}

/// Flag beats config beats `DOGFIGHT_OUT_DIR` beats the current directory.
/// The directory is created if missing.
pub fn resolve_out_dir(flag: Option<&Path>, cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = flag
        .map(Path::to_path_buf)
        .or_else(|| cfg.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Failure(format!("creating {}: {e}", dir.display())))?;
    Ok(dir)
}
