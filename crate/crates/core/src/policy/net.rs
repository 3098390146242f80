use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layer::DenseLayer;
use super::PolicyError;
use crate::engine::Mode;

/// Cardinalities of the low-level action heads: heading step (13), speed
/// index (9), cannon trigger (2), rocket trigger (2).
pub const LOW_LEVEL_HEAD_SPEC: [usize; 4] = [13, 9, 2, 2];
/// The commander picks one of the three modes.
pub const COMMANDER_HEAD_SPEC: [usize; 1] = [3];

const TRUNK_SIZES: [usize; 2] = [64, 64];
const BRANCH_SIZES: [usize; 1] = [64];
const HIDDEN_GAIN: f64 = std::f64::consts::SQRT_2;
const HEAD_GAIN: f64 = 0.01;
const VALUE_GAIN: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyRole {
    Attack,
    Engage,
    Defend,
    Commander,
}

impl PolicyRole {
    pub fn name(self) -> &'static str {
        match self {
            PolicyRole::Attack => "attack",
            PolicyRole::Engage => "engage",
            PolicyRole::Defend => "defend",
            PolicyRole::Commander => "commander",
        }
    }

    pub fn from_mode(mode: Mode) -> Self {
        match mode {
            Mode::Attack => PolicyRole::Attack,
            Mode::Engage => PolicyRole::Engage,
            Mode::Defend => PolicyRole::Defend,
        }
    }

    pub fn is_low_level(self) -> bool {
        self != PolicyRole::Commander
    }
}

impl std::fmt::Display for PolicyRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Cached intermediate results of one batched forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub input: Array2<f64>,
    /// Post-tanh output of each hidden layer.
    pub activations: Vec<Array2<f64>>,
    /// One (batch, cardinality) logit block per head.
    pub logits: Vec<Array2<f64>>,
    pub values: Array1<f64>,
}

impl ForwardPass {
    pub fn batch_len(&self) -> usize {
        self.input.nrows()
    }

    /// Logit views for one batch row, in head order.
    pub fn logit_rows(&self, row: usize) -> Vec<ArrayView1<'_, f64>> {
        self.logits.iter().map(|l| l.row(row)).collect()
    }
}

fn forward_stack(
    layers: &[&DenseLayer],
    heads: &[&DenseLayer],
    value: &DenseLayer,
    input_width: usize,
    obs: ArrayView2<f64>,
) -> Result<ForwardPass, PolicyError> {
    if obs.ncols() != input_width {
        return Err(PolicyError::ShapeMismatch(format!(
            "observation width {} vs network input {}",
            obs.ncols(),
            input_width
        )));
    }
    let input = obs.to_owned();
    let mut activations = Vec::with_capacity(layers.len());
    {
        let mut cur = input.view();
        for layer in layers {
            let a = layer.forward(cur).mapv(f64::tanh);
            activations.push(a);
            cur = activations.last().unwrap().view();
        }
    }
    let top = activations.last().map_or(input.view(), |a| a.view());
    let logits: Vec<Array2<f64>> = heads.iter().map(|h| h.forward(top)).collect();
    let values = value.forward(top).index_axis(Axis(1), 0).to_owned();
    if values.iter().any(|v| !v.is_finite())
        || logits.iter().any(|l| l.iter().any(|v| !v.is_finite()))
    {
        return Err(PolicyError::NonFinite("forward pass produced non-finite output".into()));
    }
    Ok(ForwardPass { input, activations, logits, values })
}

/// Backward pass through a layer stack. Returns per-layer weight gradients
/// (hidden, heads, value) and the gradient w.r.t. the input batch.
#[allow(clippy::type_complexity)]
fn backward_stack(
    layers: &[&DenseLayer],
    heads: &[&DenseLayer],
    value: &DenseLayer,
    pass: &ForwardPass,
    dlogits: &[Array2<f64>],
    dvalues: ArrayView1<f64>,
) -> (Vec<DenseLayer>, Vec<DenseLayer>, DenseLayer, Array2<f64>) {
    let top = pass
        .activations
        .last()
        .map_or(pass.input.view(), |a| a.view());

    let mut d_top: Array2<f64> = Array2::zeros(top.raw_dim());
    let mut head_grads = Vec::with_capacity(heads.len());
    for (head, dl) in heads.iter().zip(dlogits) {
        head_grads.push(DenseLayer { w: dl.t().dot(&top), b: dl.sum_axis(Axis(0)) });
        d_top += &dl.dot(&head.w);
    }
    let dv = dvalues.insert_axis(Axis(1));
    let value_grad =
        DenseLayer { w: dv.t().dot(&top), b: Array1::from_elem(1, dvalues.sum()) };
    d_top += &dv.dot(&value.w);

    let mut layer_grads: Vec<DenseLayer> = Vec::with_capacity(layers.len());
    let mut d_out = d_top;
    for (i, layer) in layers.iter().enumerate().rev() {
        let a = pass.activations[i].view();
        let dz = &d_out * &a.mapv(|t| 1.0 - t * t);
        let below = if i == 0 { pass.input.view() } else { pass.activations[i - 1].view() };
        layer_grads.push(DenseLayer { w: dz.t().dot(&below), b: dz.sum_axis(Axis(0)) });
        d_out = dz.dot(&layer.w);
    }
    layer_grads.reverse();
    (layer_grads, head_grads, value_grad, d_out)
}

fn flatten_grads(
    layer_grads: &[DenseLayer],
    head_grads: &[DenseLayer],
    value_grad: &DenseLayer,
) -> Vec<f64> {
    let mut flat = Vec::new();
    for g in layer_grads {
        g.write_params(&mut flat);
    }
    for g in head_grads {
        g.write_params(&mut flat);
    }
    value_grad.write_params(&mut flat);
    flat
}

fn build_heads(
    top_width: usize,
    head_spec: &[usize],
    rng: &mut ChaCha8Rng,
) -> (Vec<DenseLayer>, DenseLayer) {
    let heads = head_spec
        .iter()
        .map(|&k| DenseLayer::orthogonal(k, top_width, HEAD_GAIN, rng))
        .collect();
    let value = DenseLayer::orthogonal(1, top_width, VALUE_GAIN, rng);
    (heads, value)
}

/// A standalone policy/value network.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNet {
    pub role: PolicyRole,
    pub input_width: usize,
    pub head_spec: Vec<usize>,
    pub hidden: Vec<DenseLayer>,
    pub heads: Vec<DenseLayer>,
    pub value: DenseLayer,
}

impl PolicyNet {
    pub fn new(
        role: PolicyRole,
        input_width: usize,
        hidden_sizes: &[usize],
        head_spec: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut hidden = Vec::with_capacity(hidden_sizes.len());
        let mut cur = input_width;
        for &n in hidden_sizes {
            hidden.push(DenseLayer::orthogonal(n, cur, HIDDEN_GAIN, rng));
            cur = n;
        }
        let (heads, value) = build_heads(cur, head_spec, rng);
        Self { role, input_width, head_spec: head_spec.to_vec(), hidden, heads, value }
    }

    /// A low-level controller net: shared-trunk-sized stack (two trunk
    /// layers plus one branch layer) over the low-level observation.
    pub fn low_level(role: PolicyRole, rng: &mut ChaCha8Rng) -> Self {
        assert!(role.is_low_level(), "commander is not a low-level controller");
        let sizes: Vec<usize> = TRUNK_SIZES.iter().chain(&BRANCH_SIZES).copied().collect();
        Self::new(
            role,
            crate::engine::LOW_LEVEL_OBS_WIDTH,
            &sizes,
            &LOW_LEVEL_HEAD_SPEC,
            rng,
        )
    }

    /// A commander net for sensing parameter `m`.
    pub fn commander(m: usize, rng: &mut ChaCha8Rng) -> Self {
        Self::new(
            PolicyRole::Commander,
            crate::engine::commander_obs_width(m),
            &TRUNK_SIZES,
            &COMMANDER_HEAD_SPEC,
            rng,
        )
    }

    pub fn forward(&self, obs: ArrayView2<f64>) -> Result<ForwardPass, PolicyError> {
        let layers: Vec<&DenseLayer> = self.hidden.iter().collect();
        let heads: Vec<&DenseLayer> = self.heads.iter().collect();
        forward_stack(&layers, &heads, &self.value, self.input_width, obs)
    }

    /// Gradients of a scalar loss w.r.t. every parameter, given the loss
    /// gradients at the logits and value outputs. Flat layout matches
    /// [`Self::params`]. Also returns the gradient w.r.t. the observations.
    pub fn backward(
        &self,
        pass: &ForwardPass,
        dlogits: &[Array2<f64>],
        dvalues: ArrayView1<f64>,
    ) -> (Vec<f64>, Array2<f64>) {
        let layers: Vec<&DenseLayer> = self.hidden.iter().collect();
        let heads: Vec<&DenseLayer> = self.heads.iter().collect();
        let (lg, hg, vg, dinput) =
            backward_stack(&layers, &heads, &self.value, pass, dlogits, dvalues);
        (flatten_grads(&lg, &hg, &vg), dinput)
    }

    pub fn param_count(&self) -> usize {
        self.hidden.iter().map(DenseLayer::param_count).sum::<usize>()
            + self.heads.iter().map(DenseLayer::param_count).sum::<usize>()
            + self.value.param_count()
    }

    /// Canonical flat parameter order: hidden layers, heads, value; each
    /// layer as row-major weights then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.param_count());
        for l in &self.hidden {
            l.write_params(&mut flat);
        }
        for h in &self.heads {
            h.write_params(&mut flat);
        }
        self.value.write_params(&mut flat);
        flat
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<(), PolicyError> {
        if flat.len() != self.param_count() {
            return Err(PolicyError::ShapeMismatch(format!(
                "{} parameters supplied, network has {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut off = 0;
        for l in &mut self.hidden {
            off += l.read_params(&flat[off..]);
        }
        for h in &mut self.heads {
            off += h.read_params(&flat[off..]);
        }
        self.value.read_params(&flat[off..]);
        Ok(())
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.hidden.iter().map(DenseLayer::out_width).collect()
    }
}

/// One mode's private tail: an extra hidden layer plus its own heads.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBranch {
    pub hidden: Vec<DenseLayer>,
    pub heads: Vec<DenseLayer>,
    pub value: DenseLayer,
}

/// The three low-level policies with a genuinely shared trunk: a trunk
/// update made while training one mode moves the other two identically.
#[derive(Debug, Clone, PartialEq)]
pub struct LowLevelPolicies {
    pub input_width: usize,
    pub trunk: Vec<DenseLayer>,
    pub branches: [ModeBranch; 3],
}

impl LowLevelPolicies {
    pub fn new(rng: &mut ChaCha8Rng) -> Self {
        let input_width = crate::engine::LOW_LEVEL_OBS_WIDTH;
        let mut trunk = Vec::new();
        let mut cur = input_width;
        for &n in &TRUNK_SIZES {
            trunk.push(DenseLayer::orthogonal(n, cur, HIDDEN_GAIN, rng));
            cur = n;
        }
        let branches = std::array::from_fn(|_| {
            let mut hidden = Vec::new();
            let mut w = cur;
            for &n in &BRANCH_SIZES {
                hidden.push(DenseLayer::orthogonal(n, w, HIDDEN_GAIN, rng));
                w = n;
            }
            let (heads, value) = build_heads(w, &LOW_LEVEL_HEAD_SPEC, rng);
            ModeBranch { hidden, heads, value }
        });
        Self { input_width, trunk, branches }
    }

    fn stack(&self, mode: Mode) -> (Vec<&DenseLayer>, Vec<&DenseLayer>, &DenseLayer) {
        let branch = &self.branches[mode.index()];
        let layers: Vec<&DenseLayer> = self.trunk.iter().chain(&branch.hidden).collect();
        let heads: Vec<&DenseLayer> = branch.heads.iter().collect();
        (layers, heads, &branch.value)
    }

    pub fn forward_mode(
        &self,
        mode: Mode,
        obs: ArrayView2<f64>,
    ) -> Result<ForwardPass, PolicyError> {
        let (layers, heads, value) = self.stack(mode);
        forward_stack(&layers, &heads, value, self.input_width, obs)
    }

    /// Gradient w.r.t. the mode's trainable parameters (trunk plus its
    /// branch), flat layout matching [`Self::mode_params`].
    pub fn backward_mode(
        &self,
        mode: Mode,
        pass: &ForwardPass,
        dlogits: &[Array2<f64>],
        dvalues: ArrayView1<f64>,
    ) -> Vec<f64> {
        let (layers, heads, value) = self.stack(mode);
        let (lg, hg, vg, _) = backward_stack(&layers, &heads, value, pass, dlogits, dvalues);
        flatten_grads(&lg, &hg, &vg)
    }

    pub fn mode_param_count(&self, mode: Mode) -> usize {
        let branch = &self.branches[mode.index()];
        self.trunk.iter().map(DenseLayer::param_count).sum::<usize>()
            + branch.hidden.iter().map(DenseLayer::param_count).sum::<usize>()
            + branch.heads.iter().map(DenseLayer::param_count).sum::<usize>()
            + branch.value.param_count()
    }

    pub fn mode_params(&self, mode: Mode) -> Vec<f64> {
        let branch = &self.branches[mode.index()];
        let mut flat = Vec::with_capacity(self.mode_param_count(mode));
        for l in self.trunk.iter().chain(&branch.hidden) {
            l.write_params(&mut flat);
        }
        for h in &branch.heads {
            h.write_params(&mut flat);
        }
        branch.value.write_params(&mut flat);
        flat
    }

    pub fn set_mode_params(&mut self, mode: Mode, flat: &[f64]) -> Result<(), PolicyError> {
        if flat.len() != self.mode_param_count(mode) {
            return Err(PolicyError::ShapeMismatch(format!(
                "{} parameters supplied, mode has {}",
                flat.len(),
                self.mode_param_count(mode)
            )));
        }
        let branch = &mut self.branches[mode.index()];
        let mut off = 0;
        for l in self.trunk.iter_mut().chain(&mut branch.hidden) {
            off += l.read_params(&flat[off..]);
        }
        for h in &mut branch.heads {
            off += h.read_params(&flat[off..]);
        }
        branch.value.read_params(&flat[off..]);
        Ok(())
    }

    /// Freezes one mode into a standalone network (trunk and branch copied
    /// out), e.g. for checkpointing.
    pub fn export_mode(&self, mode: Mode) -> PolicyNet {
        let branch = &self.branches[mode.index()];
        PolicyNet {
            role: PolicyRole::from_mode(mode),
            input_width: self.input_width,
            head_spec: LOW_LEVEL_HEAD_SPEC.to_vec(),
            hidden: self.trunk.iter().chain(&branch.hidden).cloned().collect(),
            heads: branch.heads.clone(),
            value: branch.value.clone(),
        }
    }
}
