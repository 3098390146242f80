//! The explanation harness.
//!
//! Two perturbation sweeps probe a trained commander: the global sweep
//! plays whole episodes across a grid of (opponent strategy, combat
//! difference, sensing capability) and logs every activation; the local
//! sweep builds synthetic observations on a grid of nearest-enemy
//! (distance, antenna train angle, aspect angle) features and queries the
//! commander directly. Activation records aggregate into argmax-mode grids
//! rendered as SVG heatmaps. Reward decomposition attributes each option
//! window's reward to the active mode, and per-component Q regressors
//! support pairwise action-preference deltas.

mod decompose;
mod grid;
mod heatmap;
mod qnet;
mod records;
mod sweep;

pub use decompose::{decompose_returns, DecompositionView, RewardComponents};
pub use grid::{
    aggregate_global, aggregate_local, read_grid_json, write_grid_json, ExplanationGrid,
    GridAxes, GridCell,
};
pub use heatmap::{render_heatmap_slice, write_heatmaps};
pub use qnet::{
    commander_q_data, q_delta, train_decomposed_q, train_monolithic_q, DecomposedQ, QNet,
    QTrainConfig, QTrajectory, QTransition,
};
pub use records::{
    read_global_records, read_local_records, write_global_records, write_local_records,
    GlobalRecord, LocalRecord, OpponentStrategy,
};
pub use sweep::{
    run_global_sweep, run_local_sweep, GlobalSweepSpec, LocalSweepSpec, ModeProbe,
    FILLER_D_MAX_KM, FILLER_D_MIN_KM,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("invalid sweep spec: {0}")]
    Spec(String),
    #[error("record off the grid axes: {0}")]
    OffAxis(String),
    #[error("internal consistency: {0}")]
    Inconsistent(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("unknown reward component: {0}")]
    InvalidComponent(String),
    #[error(transparent)]
    Engine(#[from] crate::engine::EngineError),
    #[error(transparent)]
    Policy(#[from] crate::policy::PolicyError),
    #[error(transparent)]
    Train(#[from] crate::training::TrainError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
