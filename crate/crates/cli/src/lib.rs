//! Command-line front end over the dogfight core: training, evaluation,
//! explanation sweeps, heatmap rendering, and log replay, all driven by one
//! JSON config schema and a single root seed. Given the same config and
//! seed, every command writes byte-identical artifacts.

mod cells;
mod config;
mod error;
mod eval;
mod explain_cmd;
mod render;
mod replay;
mod teams;
mod train_commander;
mod train_low;

pub use config::{resolve_out_dir, resolve_seed, CommanderSection, RunConfig, OUT_DIR_ENV};
pub use error::CliError;
pub use teams::{controller_path, load_commander, load_controllers, TeamSpec};

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use dogfight::engine::{Composition, Mode};

#[derive(Debug, Parser)]
#[command(name = "dogfight", version, about = "2D multi-aircraft dogfight simulator: train, evaluate, explain")]
struct Cli {
    /// Cap rayon worker threads. Artifacts do not depend on this.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Root seed; overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config and DOGFIGHT_OUT_DIR.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one low-level controller through the league curriculum.
    TrainLow {
        #[arg(long, value_enum)]
        mode: ModeArg,
    },
    /// Train a commander over three frozen low-level controllers.
    TrainCommander {
        /// Sensing capability: nearest hostiles/friendlies observed.
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value_t = CompositionArg::Homo)]
        composition: CompositionArg,
        /// Directory holding attack.ckpt, engage.ckpt, defend.ckpt.
        #[arg(long, value_name = "DIR")]
        controllers: PathBuf,
    },
    /// Pit two teams against each other and report win/loss/draw fractions.
    Eval {
        /// Agent team spec, e.g. "commander:<ckpt>:<dir>" or "split:<dir>".
        #[arg(long)]
        agents: String,
        /// Opponent team spec, e.g. "random" or "fixed:attack:<dir>".
        #[arg(long)]
        opponents: String,
        #[arg(long)]
        episodes: usize,
    },
    /// Run an explanation sweep: per-decision records plus an aggregated grid.
    Explain {
        #[command(subcommand)]
        sweep: ExplainCommand,
    },
    /// Render a grid JSON into one SVG heatmap per slice of its third axis.
    Render {
        #[arg(long, value_name = "PATH")]
        grid: PathBuf,
        /// Axis to slice on; must name the grid's third axis.
        #[arg(long, value_name = "NAME")]
        slice_axis: Option<String>,
        /// File-name stem for the SVGs; defaults to the grid file's stem.
        #[arg(long)]
        stem: Option<String>,
    },
    /// Verify an episode log replays bit-exactly and print its timeline.
    Replay {
        #[arg(long, value_name = "PATH")]
        log: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum ExplainCommand {
    /// Mode activation frequencies over strategy x difference x sensing.
    Global {
        /// Directory with commander_m{m}[_homo|_hetero].ckpt checkpoints.
        #[arg(long, value_name = "DIR")]
        commanders: PathBuf,
        /// Directory holding attack.ckpt, engage.ckpt, defend.ckpt.
        #[arg(long, value_name = "DIR")]
        controllers: PathBuf,
        /// Restrict to axis values, e.g. "strategy=mixed,m=3".
        #[arg(long)]
        cells: Option<String>,
    },
    /// Synthetic nearest-hostile probes over distance x ATA x aspect.
    Local {
        #[arg(long, value_name = "PATH")]
        commander: PathBuf,
        /// Restrict to axis values, e.g. "d_km=7,ata_deg=30".
        #[arg(long)]
        cells: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Attack,
    Engage,
    Defend,
}

impl From<ModeArg> for Mode {
    fn from(arg: ModeArg) -> Mode {
        match arg {
            ModeArg::Attack => Mode::Attack,
            ModeArg::Engage => Mode::Engage,
            ModeArg::Defend => Mode::Defend,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CompositionArg {
    Homo,
    Hetero,
}

impl From<CompositionArg> for Composition {
    fn from(arg: CompositionArg) -> Composition {
        match arg {
            CompositionArg::Homo => Composition::HomogeneousAc1,
            CompositionArg::Hetero => Composition::Heterogeneous,
        }
    }
}

/// Parses arguments, runs the selected command, and returns the process
/// exit code. Normal output goes to `io`; diagnostics go to stderr.
pub fn run<I, T>(args: I, io: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprint!("{e}");
            return 2;
        }
        // --help and --version render here.
        Err(e) => {
            let _ = write!(io, "{e}");
            return 0;
        }
    };
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return 2;
        }
        // A second configuration attempt in the same process is fine; the
        // pool from the first one keeps serving.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(cli, io) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, io: &mut dyn Write) -> Result<(), CliError> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let seed = resolve_seed(cli.seed, &cfg);
    let out = || resolve_out_dir(cli.out.as_deref(), &cfg);
    match cli.command {
        Command::TrainLow { mode } => train_low::run(mode.into(), &cfg, seed, &out()?, io),
        Command::TrainCommander { m, composition, controllers } => {
            train_commander::run(m, composition.into(), &controllers, &cfg, seed, &out()?, io)
        }
        Command::Eval { agents, opponents, episodes } => {
            eval::run(&agents, &opponents, episodes, &cfg, seed, &out()?, io)
        }
        Command::Explain { sweep: ExplainCommand::Global { commanders, controllers, cells } } => {
            explain_cmd::run_global(&commanders, &controllers, cells.as_deref(), &cfg, seed, &out()?, io)
        }
        Command::Explain { sweep: ExplainCommand::Local { commander, cells } } => {
            explain_cmd::run_local(&commander, cells.as_deref(), &cfg, seed, &out()?, io)
        }
        Command::Render { grid, slice_axis, stem } => {
            render::run(&grid, slice_axis.as_deref(), stem.as_deref(), &out()?, io)
        }
        Command::Replay { log } => replay::run(&log, io),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn help_exits_zero_and_names_every_command() {
        let mut out = Vec::new();
        let code = run(["dogfight", "--help"], &mut out);
        assert_eq!(code, 0);
        let text = String::from_utf8(out).unwrap();
        for cmd in ["train-low", "train-commander", "eval", "explain", "render", "replay"] {
            assert!(text.contains(cmd), "help should mention {cmd}");
        }
    }

    #[test]
    fn usage_errors_exit_2() {
        let mut out = Vec::new();
        assert_eq!(run(["dogfight", "no-such-command"], &mut out), 2);
        assert_eq!(run(["dogfight", "train-low"], &mut out), 2);
        assert_eq!(run(["dogfight", "train-low", "--mode", "banana"], &mut out), 2);
        assert_eq!(run(["dogfight", "eval", "--agents", "noop"], &mut out), 2);
        assert_eq!(run(["dogfight", "--workers", "0", "replay", "--log", "x"], &mut out), 2);
    }

    #[test]
    fn missing_config_file_exits_2() {
        let mut out = Vec::new();
        let code = run(
            ["dogfight", "--config", "/no/such/config.json", "eval", "--agents", "noop", "--opponents", "noop", "--episodes", "1"],
            &mut out,
        );
        assert_eq!(code, 2);
    }
}
