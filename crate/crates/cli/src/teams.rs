//! Team specifications for evaluation. A compact string names a behavior
//! and the artifacts it needs:
//!
//! ```text
//! noop | pursuit | random
//! fixed:<mode>:<controllers-dir>
//! split:<controllers-dir>
//! mixed:<controllers-dir>
//! commander:<checkpoint>:<controllers-dir>
//! ```
//!
//! A controllers directory holds `attack.ckpt`, `engage.ckpt`, and
//! `defend.ckpt`. A commander checkpoint carries its sensing capability m
//! implicitly in its input width.

use std::path::{Path, PathBuf};

use dogfight::engine::{commander_obs_width, Mode, MAX_SENSING};
use dogfight::policy::{load_checkpoint_as, PolicyNet, PolicyRole, COMMANDER_HEAD_SPEC};
use dogfight::training::{FrozenControllers, TeamBehavior};

use crate::error::CliError;

pub fn controller_path(dir: &Path, mode: Mode) -> PathBuf {
    dir.join(format!("{}.ckpt", mode.name()))
}

pub fn load_controllers(dir: &Path) -> Result<FrozenControllers, CliError> {
    let mut nets = Vec::with_capacity(3);
    for mode in Mode::ALL {
        let path = controller_path(dir, mode);
        if !path.exists() {
            return Err(CliError::MissingArtifact(format!(
                "controller checkpoint {} not found",
                path.display()
            )));
        }
        nets.push(load_checkpoint_as(&path, PolicyRole::from_mode(mode))?);
    }
    let defend = nets.pop().expect("three controllers");
    let engage = nets.pop().expect("three controllers");
    let attack = nets.pop().expect("three controllers");
    Ok(FrozenControllers::new(attack, engage, defend)?)
}

/// Loads a commander checkpoint and recovers its sensing capability from
/// the stored input width.
pub fn load_commander(path: &Path) -> Result<(PolicyNet, usize), CliError> {
    if !path.exists() {
        return Err(CliError::MissingArtifact(format!(
            "commander checkpoint {} not found",
            path.display()
        )));
    }
    let net = load_checkpoint_as(path, PolicyRole::Commander)?;
    if net.head_spec != COMMANDER_HEAD_SPEC {
        return Err(CliError::MissingArtifact(format!(
            "{} does not carry a commander head",
            path.display()
        )));
    }
    let m = (1..=MAX_SENSING)
        .find(|&m| commander_obs_width(m) == net.input_width)
        .ok_or_else(|| {
            CliError::MissingArtifact(format!(
                "{} has input width {}, matching no sensing capability in 1..={MAX_SENSING}",
                path.display(),
                net.input_width
            ))
        })?;
    Ok((net, m))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TeamSpec {
    Noop,
    Pursuit,
    Random,
    Fixed { mode: Mode, controllers: PathBuf },
    Split { controllers: PathBuf },
    Mixed { controllers: PathBuf },
    Commander { checkpoint: PathBuf, controllers: PathBuf },
}

impl TeamSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let bad = |msg: String| CliError::Config(msg);
        let (head, rest) = match text.split_once(':') {
            Some((head, rest)) => (head, Some(rest)),
            None => (text, None),
        };
        match (head, rest) {
            ("noop", None) => Ok(TeamSpec::Noop),
            ("pursuit", None) => Ok(TeamSpec::Pursuit),
            ("random", None) => Ok(TeamSpec::Random),
            ("noop" | "pursuit" | "random", Some(_)) => {
                Err(bad(format!("{head} takes no arguments")))
            }
            ("fixed", Some(rest)) => {
                let (mode, dir) = rest.split_once(':').ok_or_else(|| {
                    bad("fixed needs a mode and a directory: fixed:<mode>:<dir>".into())
                })?;
                let mode = Mode::ALL
                    .into_iter()
                    .find(|m| m.name() == mode)
                    .ok_or_else(|| bad(format!("unknown mode '{mode}'")))?;
                Ok(TeamSpec::Fixed { mode, controllers: PathBuf::from(dir) })
            }
            ("split", Some(dir)) => Ok(TeamSpec::Split { controllers: PathBuf::from(dir) }),
            ("mixed", Some(dir)) => Ok(TeamSpec::Mixed { controllers: PathBuf::from(dir) }),
            ("commander", Some(rest)) => {
                let (ckpt, dir) = rest.split_once(':').ok_or_else(|| {
                    bad("commander needs a checkpoint and a directory: commander:<ckpt>:<dir>"
                        .into())
                })?;
                Ok(TeamSpec::Commander {
                    checkpoint: PathBuf::from(ckpt),
                    controllers: PathBuf::from(dir),
                })
            }
            ("fixed" | "commander", None) => Err(bad(format!("{head} needs arguments"))),
            ("split" | "mixed", None) => {
                Err(bad(format!("{head} needs a controllers directory: {head}:<dir>")))
            }
            (other, _) => Err(bad(format!(
                "unknown team spec '{other}' (expected noop, pursuit, random, \
                 fixed:<mode>:<dir>, split:<dir>, mixed:<dir>, or commander:<ckpt>:<dir>)"
            ))),
        }
    }

    pub fn load(&self) -> Result<LoadedTeam, CliError> {
        let kind = match self {
            TeamSpec::Noop => LoadedKind::Noop,
            TeamSpec::Pursuit => LoadedKind::Pursuit,
            TeamSpec::Random => LoadedKind::Random,
            TeamSpec::Fixed { mode, controllers } => LoadedKind::Fixed {
                controllers: Box::new(load_controllers(controllers)?),
                mode: *mode,
            },
            TeamSpec::Split { controllers } => {
                LoadedKind::Split { controllers: Box::new(load_controllers(controllers)?) }
            }
            TeamSpec::Mixed { controllers } => {
                LoadedKind::Mixed { controllers: Box::new(load_controllers(controllers)?) }
            }
            TeamSpec::Commander { checkpoint, controllers } => {
                let (net, m) = load_commander(checkpoint)?;
                LoadedKind::Commander {
                    net: Box::new(net),
                    m,
                    controllers: Box::new(load_controllers(controllers)?),
                }
            }
        };
        Ok(LoadedTeam { kind })
    }
}

/// A team spec with its artifacts in memory, ready to hand references to
/// the episode runner.
pub struct LoadedTeam {
    kind: LoadedKind,
}

enum LoadedKind {
    Noop,
    Pursuit,
    Random,
    Fixed { controllers: Box<FrozenControllers>, mode: Mode },
    Split { controllers: Box<FrozenControllers> },
    Mixed { controllers: Box<FrozenControllers> },
    Commander { net: Box<PolicyNet>, m: usize, controllers: Box<FrozenControllers> },
}

impl LoadedTeam {
    pub fn behavior(&self) -> TeamBehavior<'_> {
        match &self.kind {
            LoadedKind::Noop => TeamBehavior::Noop,
            LoadedKind::Pursuit => TeamBehavior::Pursuit,
            LoadedKind::Random => TeamBehavior::Random,
            LoadedKind::Fixed { controllers, mode } => {
                TeamBehavior::Fixed { controllers, mode: *mode }
            }
            LoadedKind::Split { controllers } => TeamBehavior::AttackEngageSplit { controllers },
            LoadedKind::Mixed { controllers } => TeamBehavior::MixedModes { controllers },
            // Commanders are evaluated as trained: sampling the head, not
            // taking the argmax.
            LoadedKind::Commander { net, m, controllers } => {
                TeamBehavior::Commander { net, m: *m, controllers, greedy: false }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripted_specs_parse() {
        assert_eq!(TeamSpec::parse("noop").unwrap(), TeamSpec::Noop);
        assert_eq!(TeamSpec::parse("pursuit").unwrap(), TeamSpec::Pursuit);
        assert_eq!(TeamSpec::parse("random").unwrap(), TeamSpec::Random);
    }

    #[test]
    fn artifact_specs_parse_with_paths() {
        assert_eq!(
            TeamSpec::parse("fixed:engage:ckpts").unwrap(),
            TeamSpec::Fixed { mode: Mode::Engage, controllers: PathBuf::from("ckpts") }
        );
        assert_eq!(
            TeamSpec::parse("split:out/run1").unwrap(),
            TeamSpec::Split { controllers: PathBuf::from("out/run1") }
        );
        assert_eq!(
            TeamSpec::parse("commander:out/commander_m3_homo.ckpt:out").unwrap(),
            TeamSpec::Commander {
                checkpoint: PathBuf::from("out/commander_m3_homo.ckpt"),
                controllers: PathBuf::from("out"),
            }
        );
    }

    #[test]
    fn malformed_specs_are_config_errors() {
        for text in [
            "",
            "nope",
            "noop:x",
            "fixed",
            "fixed:banana:dir",
            "fixed:attack",
            "split",
            "commander:only_ckpt",
        ] {
            let err = TeamSpec::parse(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text:?} should be a usage error");
        }
    }

    #[test]
    fn loading_from_an_empty_directory_reports_the_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_controllers(dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        assert!(err.to_string().contains("attack.ckpt"));
    }

    #[test]
    fn missing_commander_checkpoint_exits_4() {
        let err = load_commander(Path::new("/no/such/commander.ckpt")).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}
