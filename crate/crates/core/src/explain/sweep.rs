//! The two perturbation sweeps.
//!
//! The global sweep plays full hierarchical episodes over a grid of
//! (opponent strategy, combat difference, sensing capability) cells and
//! logs every commander decision. Combat difference k means the agent team
//! fields `baseline + k` aircraft against `baseline` opponents, so the
//! default baseline of five makes k = -2 a 3-vs-5 fight.
//!
//! The local sweep skips the engine entirely: it synthesizes commander
//! observations whose nearest-enemy block is pinned to a grid of
//! (distance, antenna train angle, aspect angle) values, randomizes every
//! other feature, and records the commander's greedy mode. Cells are
//! seeded from their coordinates, so rayon scheduling cannot change either
//! sweep's output.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{
    commander_obs_width, hostile_block, AircraftId, AircraftType, Composition, Mode,
    ScenarioConfig, MAX_SENSING,
};
use crate::policy::{masked_probs, PolicyNet, COMMANDER_HEAD_SPEC};
use crate::rng::{cell_seed, derive_seed};
use crate::training::{run_team_episode, FrozenControllers, TeamBehavior};

use super::grid::GridAxes;
use super::records::{GlobalRecord, LocalRecord, OpponentStrategy};
use super::ExplainError;

/// Filler contacts in synthetic observations sit inside this distance band.
pub const FILLER_D_MIN_KM: f64 = 0.5;
pub const FILLER_D_MAX_KM: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GlobalSweepSpec {
    pub strategies: Vec<OpponentStrategy>,
    /// Agent-team size minus `baseline_opponents`, one axis value per entry.
    pub differences: Vec<i64>,
    /// Commander sensing capabilities; each needs its own trained commander.
    pub sensing: Vec<usize>,
    pub episodes_per_cell: usize,
    pub composition: Composition,
    pub baseline_opponents: usize,
    pub max_ticks: u32,
    pub seed: u64,
}

impl Default for GlobalSweepSpec {
    fn default() -> Self {
        Self {
            strategies: OpponentStrategy::ALL.to_vec(),
            differences: (-4..=5).collect(),
            sensing: (1..=MAX_SENSING).collect(),
            episodes_per_cell: 100,
            composition: Composition::Heterogeneous,
            baseline_opponents: 5,
            max_ticks: 500,
            seed: 0,
        }
    }
}

fn check_ascending<T: PartialOrd + std::fmt::Debug>(
    name: &str,
    values: &[T],
) -> Result<(), ExplainError> {
    if values.is_empty() {
        return Err(ExplainError::Spec(format!("{name} axis is empty")));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ExplainError::Spec(format!(
            "{name} axis must be strictly ascending, got {values:?}"
        )));
    }
    Ok(())
}

impl GlobalSweepSpec {
    pub fn validate(&self) -> Result<(), ExplainError> {
        if self.strategies.is_empty() {
            return Err(ExplainError::Spec("strategy axis is empty".into()));
        }
        for (i, s) in self.strategies.iter().enumerate() {
            if self.strategies[..i].contains(s) {
                return Err(ExplainError::Spec(format!("duplicate strategy {s}")));
            }
        }
        check_ascending("difference", &self.differences)?;
        check_ascending("sensing", &self.sensing)?;
        for &m in &self.sensing {
            if m == 0 || m > MAX_SENSING {
                return Err(ExplainError::Spec(format!(
                    "sensing capability {m} outside 1..={MAX_SENSING}"
                )));
            }
        }
        if self.baseline_opponents == 0 {
            return Err(ExplainError::Spec("baseline team size must be positive".into()));
        }
        for &k in &self.differences {
            self.scenario_for(k)?;
        }
        if self.episodes_per_cell == 0 {
            return Err(ExplainError::Spec("episodes_per_cell must be positive".into()));
        }
        if self.max_ticks == 0 {
            return Err(ExplainError::Spec("max_ticks must be positive".into()));
        }
        Ok(())
    }

    /// The scenario one cell at combat difference `k` plays: (baseline + k)
    /// agents versus baseline opponents.
    pub fn scenario_for(&self, difference: i64) -> Result<ScenarioConfig, ExplainError> {
        let n_agents = self.baseline_opponents as i64 + difference;
        if n_agents < 1 {
            return Err(ExplainError::Spec(format!(
                "difference {difference} leaves the agent team empty"
            )));
        }
        let mut cfg = ScenarioConfig::new(n_agents as usize, self.baseline_opponents, 0);
        cfg.composition = self.composition;
        cfg.max_ticks = self.max_ticks;
        Ok(cfg)
    }

    pub fn axes(&self) -> GridAxes {
        GridAxes {
            names: ["strategy".into(), "difference".into(), "m".into()],
            values: [
                self.strategies.iter().map(|s| s.name().to_string()).collect(),
                self.differences.iter().map(|d| d.to_string()).collect(),
                self.sensing.iter().map(|m| m.to_string()).collect(),
            ],
        }
    }
}

/// Plays every cell of the global sweep and returns one record per
/// commander decision, ordered by cell, then episode, then window.
///
/// `commanders` maps sensing capability to its trained commander; a missing
/// or geometry-mismatched entry for any swept `m` is a missing artifact.
pub fn run_global_sweep(
    spec: &GlobalSweepSpec,
    commanders: &BTreeMap<usize, PolicyNet>,
    controllers: &FrozenControllers,
) -> Result<Vec<GlobalRecord>, ExplainError> {
    spec.validate()?;
    for &m in &spec.sensing {
        let net = commanders.get(&m).ok_or_else(|| {
            ExplainError::MissingArtifact(format!("no commander for m = {m}"))
        })?;
        if net.head_spec != COMMANDER_HEAD_SPEC || net.input_width != commander_obs_width(m) {
            return Err(ExplainError::MissingArtifact(format!(
                "commander for m = {m} has the wrong geometry"
            )));
        }
    }

    let mut cells = Vec::new();
    for si in 0..spec.strategies.len() {
        for di in 0..spec.differences.len() {
            for mi in 0..spec.sensing.len() {
                cells.push((si, di, mi));
            }
        }
    }

    let per_cell: Result<Vec<Vec<GlobalRecord>>, ExplainError> = cells
        .par_iter()
        .map(|&(si, di, mi)| {
            let strategy = spec.strategies[si];
            let difference = spec.differences[di];
            let m = spec.sensing[mi];
            let net = &commanders[&m];
            let scenario = spec.scenario_for(difference)?;
            let cseed = cell_seed(spec.seed, &[si as u64, di as u64, mi as u64]);

            let mut records = Vec::new();
            for e in 0..spec.episodes_per_cell {
                let opponents = match strategy {
                    OpponentStrategy::Attack => {
                        TeamBehavior::Fixed { controllers, mode: Mode::Attack }
                    }
                    OpponentStrategy::Engage => {
                        TeamBehavior::Fixed { controllers, mode: Mode::Engage }
                    }
                    OpponentStrategy::Defend => {
                        TeamBehavior::Fixed { controllers, mode: Mode::Defend }
                    }
                    OpponentStrategy::Mixed => TeamBehavior::MixedModes { controllers },
                };
                let agents = TeamBehavior::Commander { net, m, controllers, greedy: false };
                let trace = run_team_episode(
                    &scenario,
                    agents,
                    opponents,
                    derive_seed(cseed, "episode", e as u64),
                )?;
                for w in &trace.windows {
                    for s in &w.samples {
                        records.push(GlobalRecord {
                            strategy,
                            difference,
                            m,
                            episode: e as u64,
                            step: w.window as u64,
                            agent: s.agent,
                            aircraft_type: trace.world.aircraft(s.agent)?.aircraft_type,
                            mode: s.mode,
                        });
                    }
                }
            }
            Ok(records)
        })
        .collect();

    Ok(per_cell?.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalSweepSpec {
    /// Nearest-enemy distances in kilometres.
    pub d_bins_km: Vec<f64>,
    /// Own antenna train angle to the nearest enemy, unsigned degrees.
    pub ata_bins_deg: Vec<f64>,
    /// Aspect angle of the nearest enemy, unsigned degrees.
    pub aa_bins_deg: Vec<f64>,
    /// Sensing capability of the probed commander. The sweep is defined
    /// for m = 3 only.
    pub m: usize,
    pub samples_per_cell: usize,
    pub seed: u64,
}

impl Default for LocalSweepSpec {
    fn default() -> Self {
        Self {
            d_bins_km: (0..8).map(|i| 1.0 + 2.0 * i as f64).collect(),
            ata_bins_deg: (0..7).map(|i| 30.0 * i as f64).collect(),
            aa_bins_deg: (0..7).map(|i| 30.0 * i as f64).collect(),
            m: 3,
            samples_per_cell: 100,
            seed: 0,
        }
    }
}

impl LocalSweepSpec {
    pub fn validate(&self) -> Result<(), ExplainError> {
        check_ascending("d", &self.d_bins_km)?;
        check_ascending("ata", &self.ata_bins_deg)?;
        check_ascending("aa", &self.aa_bins_deg)?;
        let d_first = self.d_bins_km[0];
        let d_last = self.d_bins_km[self.d_bins_km.len() - 1];
        if d_first <= 0.0 || d_last > FILLER_D_MAX_KM {
            return Err(ExplainError::Spec(format!(
                "d bins must sit in (0, {FILLER_D_MAX_KM}] km"
            )));
        }
        for bins in [&self.ata_bins_deg, &self.aa_bins_deg] {
            if bins[0] < 0.0 || bins[bins.len() - 1] > 180.0 {
                return Err(ExplainError::Spec("angle bins must sit in [0, 180]".into()));
            }
        }
        if self.m != 3 {
            return Err(ExplainError::Spec(format!(
                "local sweep is defined for m = 3, got {}",
                self.m
            )));
        }
        if self.samples_per_cell == 0 {
            return Err(ExplainError::Spec("samples_per_cell must be positive".into()));
        }
        Ok(())
    }

    pub fn axes(&self) -> GridAxes {
        GridAxes {
            names: ["d_km".into(), "ata_deg".into(), "aa_deg".into()],
            values: [
                self.d_bins_km.iter().map(|v| v.to_string()).collect(),
                self.ata_bins_deg.iter().map(|v| v.to_string()).collect(),
                self.aa_bins_deg.iter().map(|v| v.to_string()).collect(),
            ],
        }
    }
}

/// Anything that can answer "which mode would you pick here" for a raw
/// commander observation. Trained networks answer with their greedy head;
/// tests substitute scripted rules.
pub trait ModeProbe {
    fn argmax_mode(&self, obs: &[f64]) -> Result<Mode, ExplainError>;
}

impl ModeProbe for PolicyNet {
    fn argmax_mode(&self, obs: &[f64]) -> Result<Mode, ExplainError> {
        if self.head_spec != COMMANDER_HEAD_SPEC {
            return Err(ExplainError::Inconsistent(
                "probe network does not have a commander head".into(),
            ));
        }
        if self.input_width != obs.len() {
            return Err(ExplainError::Inconsistent(format!(
                "probe expects {} features, observation has {}",
                self.input_width,
                obs.len()
            )));
        }
        let view = ndarray::ArrayView2::from_shape((1, obs.len()), obs)
            .expect("observation vector reshapes to one row");
        let pass = self.forward(view)?;
        let probs = masked_probs(pass.logits[0].row(0), &[true; 3])?;
        let mut best = 0;
        for (i, p) in probs.iter().enumerate() {
            if *p > probs[best] {
                best = i;
            }
        }
        Ok(Mode::from_index(best)?)
    }
}

fn random_type(rng: &mut ChaCha8Rng) -> AircraftType {
    if rng.random::<f64>() < 0.5 {
        AircraftType::Ac1
    } else {
        AircraftType::Ac2
    }
}

/// A synthetic commander observation whose nearest enemy sits at exactly
/// `(d, ata, aa)`. Everything else is randomized: own state, filler hostiles
/// no nearer than `d`, and friendly contacts, with both contact lists kept
/// nearest-first the way the real observation builder emits them.
fn synthetic_observation(
    m: usize,
    d: f64,
    ata: f64,
    aa: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, AircraftType), ExplainError> {
    let own_type = random_type(rng);
    let rockets_flag = match own_type {
        AircraftType::Ac1 => {
            if rng.random::<f64>() < 0.5 {
                1.0
            } else {
                0.0
            }
        }
        AircraftType::Ac2 => 0.0,
    };
    let mut obs = vec![
        own_type.type_index(),
        rng.random::<f64>(),
        rockets_flag,
        rng.random::<f64>(),
        rng.random::<f64>(),
        rng.random::<f64>(),
    ];

    obs.extend(hostile_block(d, ata, aa, random_type(rng).type_index()));
    let mut hostile_ds: Vec<f64> =
        (1..m).map(|_| rng.random_range(d..=FILLER_D_MAX_KM)).collect();
    hostile_ds.sort_by(f64::total_cmp);
    for fd in hostile_ds {
        obs.extend(hostile_block(
            fd,
            rng.random_range(0.0..=180.0),
            rng.random_range(0.0..=180.0),
            random_type(rng).type_index(),
        ));
    }

    // Friendly blocks share the hostile layout.
    let mut friendly_ds: Vec<f64> =
        (0..m).map(|_| rng.random_range(FILLER_D_MIN_KM..=FILLER_D_MAX_KM)).collect();
    friendly_ds.sort_by(f64::total_cmp);
    for fd in friendly_ds {
        obs.extend(hostile_block(
            fd,
            rng.random_range(0.0..=180.0),
            rng.random_range(0.0..=180.0),
            random_type(rng).type_index(),
        ));
    }

    for start in [6, 6 + 5 * m] {
        let ds: Vec<f64> = (0..m).map(|i| obs[start + 5 * i + 1]).collect();
        if ds.windows(2).any(|w| w[0] > w[1]) {
            return Err(ExplainError::Inconsistent(format!(
                "synthetic contact blocks out of nearest-first order: {ds:?}"
            )));
        }
    }
    Ok((obs, own_type))
}

/// Queries the probe on every cell of the local grid. One record per
/// sample; `episode` carries the sample index and `step` is always zero.
pub fn run_local_sweep<P: ModeProbe + Sync>(
    spec: &LocalSweepSpec,
    probe: &P,
) -> Result<Vec<LocalRecord>, ExplainError> {
    spec.validate()?;

    let mut cells = Vec::new();
    for di in 0..spec.d_bins_km.len() {
        for ai in 0..spec.ata_bins_deg.len() {
            for bi in 0..spec.aa_bins_deg.len() {
                cells.push((di, ai, bi));
            }
        }
    }

    let per_cell: Result<Vec<Vec<LocalRecord>>, ExplainError> = cells
        .par_iter()
        .map(|&(di, ai, bi)| {
            let d = spec.d_bins_km[di];
            let ata = spec.ata_bins_deg[ai];
            let aa = spec.aa_bins_deg[bi];
            let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(
                spec.seed,
                &[di as u64, ai as u64, bi as u64],
            ));
            let mut records = Vec::new();
            for s in 0..spec.samples_per_cell {
                let (obs, own_type) = synthetic_observation(spec.m, d, ata, aa, &mut rng)?;
                let mode = probe.argmax_mode(&obs)?;
                records.push(LocalRecord {
                    d,
                    ata,
                    aa,
                    episode: s as u64,
                    step: 0,
                    agent: AircraftId(0),
                    aircraft_type: own_type,
                    mode,
                });
            }
            Ok(records)
        })
        .collect();

    Ok(per_cell?.into_iter().flatten().collect())
}
