//! `--cells` filters restrict a sweep to a subset of axis values so a
//! large run can be split across invocations or retried piecemeal. The
//! grammar is comma-separated `axis=value` pairs; repeating an axis keeps
//! several of its values. Axis names match the grid axes.

use std::fmt::Display;

use dogfight::explain::{GlobalSweepSpec, LocalSweepSpec, OpponentStrategy};

use crate::error::CliError;

pub fn filter_global(spec: &mut GlobalSweepSpec, filter: &str) -> Result<(), CliError> {
    let mut strategies = Vec::new();
    let mut differences = Vec::new();
    let mut sensing = Vec::new();
    for (axis, value) in pairs(filter)? {
        match axis {
            "strategy" => strategies.push(parse_strategy(value)?),
            "difference" => differences.push(parse_num::<i64>(value, "difference")?),
            "m" => sensing.push(parse_num::<usize>(value, "m")?),
            other => {
                return Err(CliError::Config(format!(
                    "unknown global sweep axis '{other}' (expected strategy, difference, or m)"
                )))
            }
        }
    }
    retain(&mut spec.strategies, &strategies, "strategy")?;
    retain(&mut spec.differences, &differences, "difference")?;
    retain(&mut spec.sensing, &sensing, "m")
}

pub fn filter_local(spec: &mut LocalSweepSpec, filter: &str) -> Result<(), CliError> {
    let mut d = Vec::new();
    let mut ata = Vec::new();
    let mut aa = Vec::new();
    for (axis, value) in pairs(filter)? {
        match axis {
            "d_km" => d.push(parse_num::<f64>(value, "d_km")?),
            "ata_deg" => ata.push(parse_num::<f64>(value, "ata_deg")?),
            "aa_deg" => aa.push(parse_num::<f64>(value, "aa_deg")?),
            other => {
                return Err(CliError::Config(format!(
                    "unknown local sweep axis '{other}' (expected d_km, ata_deg, or aa_deg)"
                )))
            }
        }
    }
    retain(&mut spec.d_bins_km, &d, "d_km")?;
    retain(&mut spec.ata_bins_deg, &ata, "ata_deg")?;
    retain(&mut spec.aa_bins_deg, &aa, "aa_deg")
}

fn pairs(filter: &str) -> Result<Vec<(&str, &str)>, CliError> {
    let mut out = Vec::new();
    for entry in filter.split(',') {
        let entry = entry.trim();
        if entry.is_empty() {
            continue;
        }
        let (axis, value) = entry.split_once('=').ok_or_else(|| {
            CliError::Config(format!("cells filter entries are axis=value, got '{entry}'"))
        })?;
        out.push((axis.trim(), value.trim()));
    }
    Ok(out)
}

fn parse_strategy(text: &str) -> Result<OpponentStrategy, CliError> {
    OpponentStrategy::ALL
        .into_iter()
        .find(|s| s.name() == text)
        .ok_or_else(|| {
            CliError::Config(format!(
                "unknown opponent strategy '{text}' (attack, engage, defend, mixed)"
            ))
        })
}

fn parse_num<T: std::str::FromStr>(text: &str, axis: &str) -> Result<T, CliError> {
    text.parse()
        .map_err(|_| CliError::Config(format!("bad {axis} value '{text}'")))
}

/// Keeps only the listed values, preserving spec order. An empty list
/// leaves the axis untouched; a value not on the axis is an error.
fn retain<T: PartialEq + Display>(
    axis: &mut Vec<T>,
    keep: &[T],
    name: &str,
) -> Result<(), CliError> {
    if keep.is_empty() {
        return Ok(());
    }
    for k in keep {
        if !axis.contains(k) {
            return Err(CliError::Config(format!(
                "{name} {k} is not on the configured axis"
            )));
        }
    }
    axis.retain(|v| keep.contains(v));
    Ok(())
}
