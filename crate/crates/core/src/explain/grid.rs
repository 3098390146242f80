//! Aggregation of activation records into argmax-mode grids.
//!
//! A grid is dense and row-major over three labelled axes. Each cell keeps
//! raw per-mode counts next to the argmax so downstream consumers can
//! always re-derive the winner; ties resolve to the lowest mode index and
//! are flagged.

use std::fs::File;
use std::io::{BufReader, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::Mode;

use super::records::{GlobalRecord, LocalRecord};
use super::sweep::{GlobalSweepSpec, LocalSweepSpec};
use super::ExplainError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridAxes {
    pub names: [String; 3],
    /// Axis tick labels, e.g. "-2" for a difference or "7" for a distance.
    pub values: [Vec<String>; 3],
}

impl GridAxes {
    pub fn shape(&self) -> [usize; 3] {
        [self.values[0].len(), self.values[1].len(), self.values[2].len()]
    }

    pub fn cell_count(&self) -> usize {
        self.shape().iter().product()
    }

    /// Row-major flat index, axis 0 outermost.
    pub fn flat(&self, coords: [usize; 3]) -> usize {
        let [_, n1, n2] = self.shape();
        (coords[0] * n1 + coords[1]) * n2 + coords[2]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCell {
    pub coords: [usize; 3],
    /// Activation counts in mode order: attack, engage, defend.
    pub counts: [u64; 3],
    pub samples: u64,
    pub argmax: Mode,
    /// True when the top count is shared (including empty cells).
    pub tie: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationGrid {
    pub axes: GridAxes,
    pub cells: Vec<GridCell>,
}

fn argmax_counts(counts: &[u64; 3]) -> (Mode, bool) {
    let mut best = 0;
    for i in 1..3 {
        if counts[i] > counts[best] {
            best = i;
        }
    }
    let tie = counts.iter().filter(|&&c| c == counts[best]).count() > 1;
    (Mode::ALL[best], tie)
}

impl ExplanationGrid {
    fn from_counts(axes: GridAxes, counts: Vec<[u64; 3]>) -> Self {
        let [_, n1, n2] = axes.shape();
        let cells = counts
            .into_iter()
            .enumerate()
            .map(|(flat, counts)| {
                let coords = [flat / (n1 * n2), flat / n2 % n1, flat % n2];
                let (argmax, tie) = argmax_counts(&counts);
                GridCell {
                    coords,
                    counts,
                    samples: counts.iter().sum(),
                    argmax,
                    tie,
                }
            })
            .collect();
        Self { axes, cells }
    }

    pub fn cell(&self, coords: [usize; 3]) -> &GridCell {
        &self.cells[self.axes.flat(coords)]
    }

    /// Re-derives every cell's derived fields from its raw counts and
    /// checks the dense layout. Run on every deserialized grid.
    pub fn verify(&self) -> Result<(), ExplainError> {
        if self.cells.len() != self.axes.cell_count() {
            return Err(ExplainError::Inconsistent(format!(
                "{} cells for a {:?} grid",
                self.cells.len(),
                self.axes.shape()
            )));
        }
        for (flat, cell) in self.cells.iter().enumerate() {
            if self.axes.flat(cell.coords) != flat {
                return Err(ExplainError::Inconsistent(format!(
                    "cell {:?} stored out of row-major order",
                    cell.coords
                )));
            }
            let (argmax, tie) = argmax_counts(&cell.counts);
            let samples: u64 = cell.counts.iter().sum();
            if cell.samples != samples || cell.argmax != argmax || cell.tie != tie {
                return Err(ExplainError::Inconsistent(format!(
                    "cell {:?} disagrees with its own counts",
                    cell.coords
                )));
            }
        }
        Ok(())
    }
}

pub fn aggregate_global(
    records: &[GlobalRecord],
    spec: &GlobalSweepSpec,
) -> Result<ExplanationGrid, ExplainError> {
    spec.validate()?;
    let axes = spec.axes();
    let mut counts = vec![[0u64; 3]; axes.cell_count()];
    for r in records {
        let si = spec.strategies.iter().position(|s| *s == r.strategy);
        let di = spec.differences.iter().position(|d| *d == r.difference);
        let mi = spec.sensing.iter().position(|m| *m == r.m);
        let (Some(si), Some(di), Some(mi)) = (si, di, mi) else {
            return Err(ExplainError::OffAxis(format!(
                "record at ({}, {}, {}) is not on the sweep grid",
                r.strategy, r.difference, r.m
            )));
        };
        counts[axes.flat([si, di, mi])][r.mode.index()] += 1;
    }
    Ok(ExplanationGrid::from_counts(axes, counts))
}

pub fn aggregate_local(
    records: &[LocalRecord],
    spec: &LocalSweepSpec,
) -> Result<ExplanationGrid, ExplainError> {
    spec.validate()?;
    let axes = spec.axes();
    let mut counts = vec![[0u64; 3]; axes.cell_count()];
    for r in records {
        let di = spec.d_bins_km.iter().position(|d| *d == r.d);
        let ai = spec.ata_bins_deg.iter().position(|a| *a == r.ata);
        let bi = spec.aa_bins_deg.iter().position(|a| *a == r.aa);
        let (Some(di), Some(ai), Some(bi)) = (di, ai, bi) else {
            return Err(ExplainError::OffAxis(format!(
                "record at ({} km, {} deg, {} deg) is not on the sweep grid",
                r.d, r.ata, r.aa
            )));
        };
        counts[axes.flat([di, ai, bi])][r.mode.index()] += 1;
    }
    Ok(ExplanationGrid::from_counts(axes, counts))
}

pub fn write_grid_json(path: &Path, grid: &ExplanationGrid) -> Result<(), ExplainError> {
    let mut file = File::create(path)?;
    let text = serde_json::to_string_pretty(grid).expect("grid serializes");
    file.write_all(text.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}

pub fn read_grid_json(path: &Path) -> Result<ExplanationGrid, ExplainError> {
    if !path.exists() {
        return Err(ExplainError::MissingArtifact(path.display().to_string()));
    }
    let grid: ExplanationGrid = serde_json::from_reader(BufReader::new(File::open(path)?))
        .map_err(|e| ExplainError::Inconsistent(format!("grid json: {e}")))?;
    grid.verify()?;
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{AircraftId, AircraftType, Composition};
    use crate::explain::records::OpponentStrategy;
    use crate::explain::sweep::{run_local_sweep, ModeProbe};
    use crate::rng::substream;
    use rand::Rng;
    use std::collections::BTreeMap;

    fn small_global_spec() -> GlobalSweepSpec {
        GlobalSweepSpec {
            strategies: vec![OpponentStrategy::Attack, OpponentStrategy::Defend],
            differences: vec![-1, 0, 2],
            sensing: vec![1, 3],
            episodes_per_cell: 4,
            composition: Composition::HomogeneousAc1,
            baseline_opponents: 2,
            max_ticks: 40,
            seed: 0,
        }
    }

    fn random_global_records(n: usize, spec: &GlobalSweepSpec, seed: u64) -> Vec<GlobalRecord> {
        let mut rng = substream(seed, "grid-test", 0);
        (0..n)
            .map(|i| GlobalRecord {
                strategy: spec.strategies[rng.random_range(0..spec.strategies.len())],
                difference: spec.differences[rng.random_range(0..spec.differences.len())],
                m: spec.sensing[rng.random_range(0..spec.sensing.len())],
                episode: i as u64,
                step: 0,
                agent: AircraftId(0),
                aircraft_type: AircraftType::Ac1,
                mode: Mode::ALL[rng.random_range(0..3)],
            })
            .collect()
    }

    #[test]
    fn argmax_follows_counts_and_flags_ties() {
        assert_eq!(argmax_counts(&[70, 20, 10]), (Mode::Attack, false));
        assert_eq!(argmax_counts(&[50, 50, 0]), (Mode::Attack, true));
        assert_eq!(argmax_counts(&[10, 50, 50]), (Mode::Engage, true));
        assert_eq!(argmax_counts(&[0, 1, 2]), (Mode::Defend, false));
        assert_eq!(argmax_counts(&[0, 0, 0]), (Mode::Attack, true));
    }

    #[test]
    fn aggregation_matches_an_independent_recount() {
        let spec = small_global_spec();
        let records = random_global_records(5000, &spec, 1);
        let grid = aggregate_global(&records, &spec).unwrap();
        grid.verify().unwrap();

        let mut recount: BTreeMap<(usize, usize, usize), [u64; 3]> = BTreeMap::new();
        for r in &records {
            let key = (
                spec.strategies.iter().position(|s| *s == r.strategy).unwrap(),
                spec.differences.iter().position(|d| *d == r.difference).unwrap(),
                spec.sensing.iter().position(|m| *m == r.m).unwrap(),
            );
            recount.entry(key).or_insert([0; 3])[r.mode.index()] += 1;
        }
        assert_eq!(grid.cells.len(), 12);
        let mut total = 0;
        for cell in &grid.cells {
            let key = (cell.coords[0], cell.coords[1], cell.coords[2]);
            let expected = recount.get(&key).copied().unwrap_or([0; 3]);
            assert_eq!(cell.counts, expected);
            assert_eq!(cell.samples, expected.iter().sum::<u64>());
            total += cell.samples;
        }
        assert_eq!(total, 5000);
    }

    #[test]
    fn empty_cells_are_tie_flagged() {
        let spec = small_global_spec();
        let grid = aggregate_global(&[], &spec).unwrap();
        for cell in &grid.cells {
            assert_eq!(cell.samples, 0);
            assert_eq!(cell.argmax, Mode::Attack);
            assert!(cell.tie);
        }
    }

    #[test]
    fn off_axis_records_are_rejected() {
        let spec = small_global_spec();
        let mut records = random_global_records(10, &spec, 2);
        records[5].difference = 7;
        assert!(matches!(
            aggregate_global(&records, &spec),
            Err(ExplainError::OffAxis(_))
        ));

        let local_spec = LocalSweepSpec::default();
        let bad = LocalRecord {
            d: 2.0,
            ata: 0.0,
            aa: 0.0,
            episode: 0,
            step: 0,
            agent: AircraftId(0),
            aircraft_type: AircraftType::Ac1,
            mode: Mode::Attack,
        };
        assert!(matches!(
            aggregate_local(&[bad], &local_spec),
            Err(ExplainError::OffAxis(_))
        ));
    }

    #[test]
    fn grid_json_round_trips_and_is_verified() {
        let spec = small_global_spec();
        let records = random_global_records(300, &spec, 3);
        let grid = aggregate_global(&records, &spec).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.json");
        write_grid_json(&path, &grid).unwrap();
        assert_eq!(read_grid_json(&path).unwrap(), grid);

        // Tampering with a count must fail verification on read.
        let text = std::fs::read_to_string(&path).unwrap();
        let tampered = text.replacen("\"samples\": ", "\"samples\": 9", 1);
        assert_ne!(text, tampered);
        std::fs::write(&path, tampered).unwrap();
        assert!(matches!(
            read_grid_json(&path),
            Err(ExplainError::Inconsistent(_))
        ));
    }

    /// A scripted commander: attack head-on up close, run when the enemy
    /// points at us, engage otherwise. The aggregated grid must reproduce
    /// the rule exactly in every cell.
    struct RuleProbe;

    impl ModeProbe for RuleProbe {
        fn argmax_mode(&self, obs: &[f64]) -> Result<Mode, ExplainError> {
            let ata = obs[8];
            let aa = obs[9];
            Ok(if aa < 60.0 / 180.0 && ata < 60.0 / 180.0 {
                Mode::Attack
            } else if aa > 120.0 / 180.0 {
                Mode::Defend
            } else {
                Mode::Engage
            })
        }
    }

    #[test]
    fn local_grid_recovers_a_scripted_rule_in_every_cell() {
        let spec = LocalSweepSpec { samples_per_cell: 25, seed: 4, ..LocalSweepSpec::default() };
        let records = run_local_sweep(&spec, &RuleProbe).unwrap();
        let grid = aggregate_local(&records, &spec).unwrap();
        grid.verify().unwrap();

        for (ai, &ata) in spec.ata_bins_deg.iter().enumerate() {
            for (bi, &aa) in spec.aa_bins_deg.iter().enumerate() {
                let expected = if aa < 60.0 && ata < 60.0 {
                    Mode::Attack
                } else if aa > 120.0 {
                    Mode::Defend
                } else {
                    Mode::Engage
                };
                for di in 0..spec.d_bins_km.len() {
                    let cell = grid.cell([di, ai, bi]);
                    assert_eq!(cell.argmax, expected, "cell ({di}, {ai}, {bi})");
                    assert!(!cell.tie);
                    assert_eq!(cell.samples, 25);
                    assert_eq!(cell.counts[expected.index()], 25);
                }
            }
        }
    }
}
