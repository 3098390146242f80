use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use dogfight::explain::{
    aggregate_global, aggregate_local, run_global_sweep, run_local_sweep, write_global_records,
    write_grid_json, write_local_records,
};
use dogfight::policy::PolicyNet;
use dogfight::rng::derive_seed;

use crate::cells::{filter_global, filter_local};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::teams::{load_commander, load_controllers};

/// Finds the checkpoint for one sensing capability in a directory of
/// trained commanders. Untagged names win over composition-tagged ones.
fn commander_for_m(dir: &Path, m: usize) -> Result<PolicyNet, CliError> {
    let candidates = [
        format!("commander_m{m}.ckpt"),
        format!("commander_m{m}_hetero.ckpt"),
        format!("commander_m{m}_homo.ckpt"),
    ];
    for name in &candidates {
        let path = dir.join(name);
        if !path.exists() {
            continue;
        }
        let (net, got) = load_commander(&path)?;
        if got != m {
            return Err(CliError::MissingArtifact(format!(
                "{} holds a commander for m = {got}, expected m = {m}",
                path.display()
            )));
        }
        return Ok(net);
    }
    Err(CliError::MissingArtifact(format!(
        "no commander for m = {m} in {} (tried {})",
        dir.display(),
        candidates.join(", ")
    )))
}

pub fn run_global(
    commanders_dir: &Path,
    controllers_dir: &Path,
    cells: Option<&str>,
    cfg: &RunConfig,
    seed: u64,
    out: &Path,
    io: &mut dyn Write,
) -> Result<(), CliError> {
    let mut spec = cfg.global_sweep.clone().unwrap_or_default();
    spec.seed = derive_seed(seed, "explain-global", 0);
    if let Some(filter) = cells {
        filter_global(&mut spec, filter)?;
    }

    let controllers = load_controllers(controllers_dir)?;
    let mut commanders = BTreeMap::new();
    for &m in &spec.sensing {
        commanders.insert(m, commander_for_m(commanders_dir, m)?);
    }

    let records = run_global_sweep(&spec, &commanders, &controllers)?;
    let grid = aggregate_global(&records, &spec)?;
    writeln!(io, "{} records across {} cells", records.len(), grid.axes.cell_count())?;

    let records_path = out.join("global_records.csv");
    write_global_records(&records_path, &records)?;
    writeln!(io, "wrote {}", records_path.display())?;

    let grid_path = out.join("global_grid.json");
    write_grid_json(&grid_path, &grid)?;
    writeln!(io, "wrote {}", grid_path.display())?;
    Ok(())
}

pub fn run_local(
    commander_path: &Path,
    cells: Option<&str>,
    cfg: &RunConfig,
    seed: u64,
    out: &Path,
    io: &mut dyn Write,
) -> Result<(), CliError> {
    let mut spec = cfg.local_sweep.clone().unwrap_or_default();
    spec.seed = derive_seed(seed, "explain-local", 0);
    if let Some(filter) = cells {
        filter_local(&mut spec, filter)?;
    }

    let (net, m) = load_commander(commander_path)?;
    if m != spec.m {
        return Err(CliError::MissingArtifact(format!(
            "{} holds a commander for m = {m}, but the local sweep probes m = {}",
            commander_path.display(),
            spec.m
        )));
    }

    let records = run_local_sweep(&spec, &net)?;
    let grid = aggregate_local(&records, &spec)?;
    writeln!(io, "{} records across {} cells", records.len(), grid.axes.cell_count())?;

    let records_path = out.join("local_records.csv");
    write_local_records(&records_path, &records)?;
    writeln!(io, "wrote {}", records_path.display())?;

    let grid_path = out.join("local_grid.json");
    write_grid_json(&grid_path, &grid)?;
    writeln!(io, "wrote {}", grid_path.display())?;
    Ok(())
}
