//! Decomposed action-value estimators at the commander timescale.
//!
//! Window rewards split into per-mode components (the active mode earns
//! the window's reward, the other components earn zero), each component's
//! discounted return is regressed by its own small network, and pairwise
//! action deltas on those estimators say which component drives a
//! preference between two modes in a given state.

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::engine::{reward_commander, AircraftId};
use crate::policy::{PolicyNet, PolicyRole};
use crate::rng::substream;
use crate::training::{Adam, EpisodeTrace, TrainError};

use super::ExplainError;

/// One commander decision with its window reward split by component.
#[derive(Debug, Clone, PartialEq)]
pub struct QTransition {
    pub obs: Vec<f64>,
    /// Mode index chosen at this window.
    pub action: usize,
    /// Per-component reward earned over the window, mode order.
    pub rewards: [f64; 3],
}

pub type QTrajectory = Vec<QTransition>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QTrainConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl Default for QTrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            learning_rate: 3e-3,
            epochs: 400,
            hidden: vec![32, 32],
            seed: 0,
        }
    }
}

impl QTrainConfig {
    pub fn validate(&self) -> Result<(), ExplainError> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(ExplainError::Spec(format!("gamma {} outside [0, 1)", self.gamma)));
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(ExplainError::Spec("learning rate must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(ExplainError::Spec("epochs must be positive".into()));
        }
        Ok(())
    }
}

/// A Q(s, a) regressor over the three modes: a dense network with one
/// linear 3-wide head read as Q values. The value head that comes with the
/// shared network type is ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct QNet {
    net: PolicyNet,
}

impl QNet {
    fn new(input_width: usize, hidden: &[usize], rng: &mut rand_chacha::ChaCha8Rng) -> Self {
        Self { net: PolicyNet::new(PolicyRole::Commander, input_width, hidden, &[3], rng) }
    }

    pub fn input_width(&self) -> usize {
        self.net.input_width
    }

    pub fn q_values(&self, obs: &[f64]) -> Result<Vec<f64>, ExplainError> {
        if obs.len() != self.net.input_width {
            return Err(ExplainError::Inconsistent(format!(
                "estimator expects {} features, observation has {}",
                self.net.input_width,
                obs.len()
            )));
        }
        let view = ArrayView2::from_shape((1, obs.len()), obs)
            .expect("observation vector reshapes to one row");
        let pass = self.net.forward(view)?;
        Ok(pass.logits[0].row(0).to_vec())
    }

    pub fn q(&self, obs: &[f64], action: usize) -> Result<f64, ExplainError> {
        if action >= 3 {
            return Err(ExplainError::Spec(format!("action index {action} out of range")));
        }
        Ok(self.q_values(obs)?[action])
    }
}

/// One trained estimator per reward component, plus the discount they
/// were all fitted under.
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposedQ {
    components: [QNet; 3],
    pub gamma: f64,
}

impl DecomposedQ {
    pub fn component(&self, index: usize) -> Result<&QNet, ExplainError> {
        self.components.get(index).ok_or_else(|| {
            ExplainError::InvalidComponent(format!("component index {index}, estimators run 0..3"))
        })
    }

    pub fn component_q(
        &self,
        index: usize,
        obs: &[f64],
        action: usize,
    ) -> Result<f64, ExplainError> {
        self.component(index)?.q(obs, action)
    }

    /// Sum of the component estimates, the decomposed stand-in for a
    /// monolithic Q.
    pub fn total_q(&self, obs: &[f64], action: usize) -> Result<f64, ExplainError> {
        let mut total = 0.0;
        for net in &self.components {
            total += net.q(obs, action)?;
        }
        Ok(total)
    }
}

/// How much component `component` prefers `a1` over `a2` in state `obs`.
pub fn q_delta(
    dq: &DecomposedQ,
    component: usize,
    obs: &[f64],
    a1: usize,
    a2: usize,
) -> Result<f64, ExplainError> {
    Ok(dq.component_q(component, obs, a1)? - dq.component_q(component, obs, a2)?)
}

/// Per-agent Q trajectories out of commander episode traces. Each sample's
/// window reward lands in the component of the mode it chose.
pub fn commander_q_data(traces: &[EpisodeTrace]) -> Vec<QTrajectory> {
    let mut out = Vec::new();
    for trace in traces {
        let mut per_agent: std::collections::BTreeMap<AircraftId, QTrajectory> =
            std::collections::BTreeMap::new();
        for w in &trace.windows {
            for s in &w.samples {
                let mut rewards = [0.0; 3];
                rewards[s.mode.index()] = reward_commander(&w.events, s.agent);
                per_agent.entry(s.agent).or_default().push(QTransition {
                    obs: s.obs.clone(),
                    action: s.mode.index(),
                    rewards,
                });
            }
        }
        out.extend(per_agent.into_values());
    }
    out
}

struct FlatData {
    obs: Array2<f64>,
    actions: Vec<usize>,
    /// Discounted return per transition, one column per component.
    returns: Vec<[f64; 3]>,
}

fn flatten(trajectories: &[QTrajectory], gamma: f64) -> Result<FlatData, ExplainError> {
    let n: usize = trajectories.iter().map(|t| t.len()).sum();
    if n == 0 {
        return Err(ExplainError::InsufficientData(
            "no transitions to fit Q estimators on".into(),
        ));
    }
    let width = trajectories.iter().flatten().next().expect("n > 0").obs.len();

    let mut obs = Array2::zeros((n, width));
    let mut actions = Vec::with_capacity(n);
    let mut returns = vec![[0.0; 3]; n];
    let mut row = 0;
    for traj in trajectories {
        let start = row;
        for t in traj {
            if t.obs.len() != width {
                return Err(ExplainError::Inconsistent(format!(
                    "transition has {} features, expected {width}",
                    t.obs.len()
                )));
            }
            if t.action >= 3 {
                return Err(ExplainError::Inconsistent(format!(
                    "action index {} out of range",
                    t.action
                )));
            }
            for (c, &v) in t.obs.iter().enumerate() {
                obs[(row, c)] = v;
            }
            actions.push(t.action);
            row += 1;
        }
        // Reverse pass for the discounted return of each component.
        let mut running = [0.0; 3];
        for (offset, t) in traj.iter().enumerate().rev() {
            for (acc, &r) in running.iter_mut().zip(&t.rewards) {
                *acc = r + gamma * *acc;
            }
            returns[start + offset] = running;
        }
    }
    Ok(FlatData { obs, actions, returns })
}

/// Fits one regressor to `targets` with full-batch Adam on the squared
/// error of the chosen action's output.
fn fit_q(
    data: &FlatData,
    targets: &[f64],
    cfg: &QTrainConfig,
    stream_index: u64,
) -> Result<QNet, ExplainError> {
    let n = data.actions.len();
    let mut qnet = QNet::new(
        data.obs.ncols(),
        &cfg.hidden,
        &mut substream(cfg.seed, "q-fit", stream_index),
    );
    let mut adam = Adam::new(cfg.learning_rate, qnet.net.params().len());
    let dvalues = Array1::zeros(n);

    for _ in 0..cfg.epochs {
        let pass = qnet.net.forward(data.obs.view())?;
        let mut dlogits = Array2::zeros((n, 3));
        for r in 0..n {
            let a = data.actions[r];
            let err = pass.logits[0][(r, a)] - targets[r];
            dlogits[(r, a)] = 2.0 * err / n as f64;
        }
        let (grads, _) = qnet.net.backward(&pass, &[dlogits], dvalues.view());
        let mut params = qnet.net.params();
        adam.step(&mut params, &grads);
        if params.iter().any(|p| !p.is_finite()) {
            return Err(ExplainError::Train(TrainError::Divergence(
                "q regression produced non-finite parameters".into(),
            )));
        }
        qnet.net.set_params(&params)?;
    }
    Ok(qnet)
}

pub fn train_decomposed_q(
    trajectories: &[QTrajectory],
    cfg: &QTrainConfig,
) -> Result<DecomposedQ, ExplainError> {
    cfg.validate()?;
    let data = flatten(trajectories, cfg.gamma)?;
    let targets = |i: usize| -> Vec<f64> { data.returns.iter().map(|r| r[i]).collect() };
    let components = [
        fit_q(&data, &targets(0), cfg, 0)?,
        fit_q(&data, &targets(1), cfg, 1)?,
        fit_q(&data, &targets(2), cfg, 2)?,
    ];
    Ok(DecomposedQ { components, gamma: cfg.gamma })
}

/// A single estimator fitted to the undecomposed discounted return, for
/// checking that the component sum tracks a monolithic baseline.
pub fn train_monolithic_q(
    trajectories: &[QTrajectory],
    cfg: &QTrainConfig,
) -> Result<QNet, ExplainError> {
    cfg.validate()?;
    let data = flatten(trajectories, cfg.gamma)?;
    let totals: Vec<f64> = data.returns.iter().map(|r| r.iter().sum()).collect();
    fit_q(&data, &totals, cfg, 3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::ScenarioConfig;
    use crate::policy::LowLevelPolicies;
    use crate::training::{run_team_episode, FrozenControllers, TeamBehavior};
    use rand::Rng;

    const WIDTH: usize = 8;

    fn test_cfg() -> QTrainConfig {
        QTrainConfig { hidden: vec![24], epochs: 500, learning_rate: 5e-3, ..Default::default() }
    }

    fn random_obs(rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
        (0..WIDTH).map(|_| rng.random::<f64>()).collect()
    }

    /// Length-2 trajectories with smooth per-component rewards of the
    /// observation, so each component return is a learnable function.
    fn synthetic_data(n_traj: usize, seed: u64, active: [bool; 3]) -> Vec<QTrajectory> {
        let mut rng = substream(seed, "q-test-data", 0);
        (0..n_traj)
            .map(|_| {
                (0..2)
                    .map(|_| {
                        let obs = random_obs(&mut rng);
                        let raw = [
                            0.4 * obs[0] - 0.2,
                            0.3 * obs[1],
                            -0.25 * obs[2] + 0.1,
                        ];
                        let mut rewards = [0.0; 3];
                        for i in 0..3 {
                            if active[i] {
                                rewards[i] = raw[i];
                            }
                        }
                        QTransition { obs, action: rng.random_range(0..3), rewards }
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn discounted_returns_flatten_correctly() {
        let traj = vec![vec![
            QTransition { obs: vec![0.0; 2], action: 0, rewards: [1.0, 0.0, -1.0] },
            QTransition { obs: vec![0.0; 2], action: 1, rewards: [0.0, 2.0, 1.0] },
        ]];
        let data = flatten(&traj, 0.5).unwrap();
        assert_eq!(data.returns[1], [0.0, 2.0, 1.0]);
        assert_eq!(data.returns[0], [1.0, 1.0, -0.5]);
    }

    #[test]
    fn single_component_data_leaves_other_estimators_flat() {
        let data = synthetic_data(150, 1, [true, false, false]);
        let dq = train_decomposed_q(&data, &test_cfg()).unwrap();

        let mut rng = substream(2, "q-test-eval", 0);
        let mut off_component = 0.0;
        let mut count = 0;
        for _ in 0..100 {
            let obs = random_obs(&mut rng);
            for a in 0..3 {
                off_component += dq.component_q(1, &obs, a).unwrap().abs();
                off_component += dq.component_q(2, &obs, a).unwrap().abs();
                count += 2;
            }
        }
        let mean = off_component / f64::from(count);
        assert!(mean < 0.05, "inactive components should stay near zero, got {mean}");
    }

    #[test]
    fn component_sum_tracks_a_monolithic_estimator() {
        let data = synthetic_data(300, 3, [true, true, true]);
        let cfg = test_cfg();
        let dq = train_decomposed_q(&data, &cfg).unwrap();
        let mono = train_monolithic_q(&data, &cfg).unwrap();

        let mut rng = substream(4, "q-test-eval", 1);
        let mut gap = 0.0;
        let mut count = 0;
        for _ in 0..200 {
            let obs = random_obs(&mut rng);
            for a in 0..3 {
                gap += (dq.total_q(&obs, a).unwrap() - mono.q(&obs, a).unwrap()).abs();
                count += 1;
            }
        }
        let mean = gap / f64::from(count);
        assert!(mean < 0.1, "decomposed sum drifted {mean} from the monolithic fit");
    }

    #[test]
    fn training_is_deterministic() {
        let data = synthetic_data(40, 5, [true, true, false]);
        let cfg = QTrainConfig { epochs: 50, ..test_cfg() };
        let a = train_decomposed_q(&data, &cfg).unwrap();
        let b = train_decomposed_q(&data, &cfg).unwrap();
        let obs = vec![0.3; WIDTH];
        for i in 0..3 {
            for action in 0..3 {
                assert_eq!(
                    a.component_q(i, &obs, action).unwrap(),
                    b.component_q(i, &obs, action).unwrap()
                );
            }
        }
    }

    #[test]
    fn deltas_are_antisymmetric_and_sum_to_the_total_delta() {
        let data = synthetic_data(40, 6, [true, true, true]);
        let cfg = QTrainConfig { epochs: 60, ..test_cfg() };
        let dq = train_decomposed_q(&data, &cfg).unwrap();
        let obs = vec![0.7; WIDTH];

        for i in 0..3 {
            assert_eq!(q_delta(&dq, i, &obs, 1, 1).unwrap(), 0.0);
            let forward = q_delta(&dq, i, &obs, 0, 2).unwrap();
            let backward = q_delta(&dq, i, &obs, 2, 0).unwrap();
            assert_eq!(forward, -backward);
        }

        let summed: f64 = (0..3).map(|i| q_delta(&dq, i, &obs, 0, 1).unwrap()).sum();
        let total = dq.total_q(&obs, 0).unwrap() - dq.total_q(&obs, 1).unwrap();
        assert!((summed - total).abs() < 1e-12);
    }

    #[test]
    fn unknown_components_and_actions_are_rejected() {
        let data = synthetic_data(10, 7, [true, false, false]);
        let cfg = QTrainConfig { epochs: 5, ..test_cfg() };
        let dq = train_decomposed_q(&data, &cfg).unwrap();
        let obs = vec![0.0; WIDTH];
        assert!(matches!(
            q_delta(&dq, 3, &obs, 0, 1),
            Err(ExplainError::InvalidComponent(_))
        ));
        assert!(matches!(dq.component_q(0, &obs, 5), Err(ExplainError::Spec(_))));
        assert!(matches!(dq.component_q(0, &[0.0; 2], 0), Err(ExplainError::Inconsistent(_))));
    }

    #[test]
    fn empty_or_ragged_data_is_rejected() {
        let cfg = test_cfg();
        assert!(matches!(
            train_decomposed_q(&[], &cfg),
            Err(ExplainError::InsufficientData(_))
        ));
        assert!(matches!(
            train_decomposed_q(&[vec![]], &cfg),
            Err(ExplainError::InsufficientData(_))
        ));

        let ragged = vec![vec![
            QTransition { obs: vec![0.0; 4], action: 0, rewards: [0.0; 3] },
            QTransition { obs: vec![0.0; 5], action: 0, rewards: [0.0; 3] },
        ]];
        assert!(matches!(
            train_decomposed_q(&ragged, &cfg),
            Err(ExplainError::Inconsistent(_))
        ));
    }

    #[test]
    fn commander_traces_yield_per_agent_trajectories() {
        let stack = LowLevelPolicies::new(&mut substream(8, "q-test", 0));
        let ctrl = FrozenControllers::from_stack(&stack);
        let net = crate::policy::PolicyNet::commander(2, &mut substream(9, "q-test", 0));
        let mut cfg = ScenarioConfig::new(2, 2, 0);
        cfg.max_ticks = 100;
        let trace = run_team_episode(
            &cfg,
            TeamBehavior::Commander { net: &net, m: 2, controllers: &ctrl, greedy: false },
            TeamBehavior::MixedModes { controllers: &ctrl },
            11,
        )
        .unwrap();

        let sample_count: usize = trace.windows.iter().map(|w| w.samples.len()).sum();
        let trajectories = commander_q_data(std::slice::from_ref(&trace));
        assert_eq!(trajectories.len(), 2, "one trajectory per commanded agent");
        assert_eq!(trajectories.iter().map(Vec::len).sum::<usize>(), sample_count);
        for traj in &trajectories {
            for t in traj {
                assert_eq!(t.obs.len(), crate::engine::commander_obs_width(2));
                // Reward lives only in the chosen mode's slot.
                for i in 0..3 {
                    if i != t.action {
                        assert_eq!(t.rewards[i], 0.0);
                    }
                }
            }
        }
    }
}
