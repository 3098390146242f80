use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::engine::Mode;
use crate::policy::{
    head_entropy, masked_probs, ForwardPass, LowLevelPolicies, PolicyError, PolicyNet,
    LOW_LEVEL_HEAD_SPEC,
};

use super::buffer::{RolloutBuffer, Transition};
use super::config::PpoConfig;
use super::optim::Adam;
use super::TrainError;

/// Anything PPO can update: a standalone network or one mode view of the
/// shared-trunk stack. Parameters travel as flat vectors.
pub trait TrainableNet {
    fn input_width(&self) -> usize;
    fn head_spec(&self) -> Vec<usize>;
    fn forward(&self, obs: ArrayView2<f64>) -> Result<ForwardPass, PolicyError>;
    fn backward(
        &self,
        pass: &ForwardPass,
        dlogits: &[Array2<f64>],
        dvalues: ArrayView1<f64>,
    ) -> Vec<f64>;
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, flat: &[f64]) -> Result<(), PolicyError>;
}

impl TrainableNet for PolicyNet {
    fn input_width(&self) -> usize {
        self.input_width
    }

    fn head_spec(&self) -> Vec<usize> {
        self.head_spec.clone()
    }

    fn forward(&self, obs: ArrayView2<f64>) -> Result<ForwardPass, PolicyError> {
        PolicyNet::forward(self, obs)
    }

    fn backward(
        &self,
        pass: &ForwardPass,
        dlogits: &[Array2<f64>],
        dvalues: ArrayView1<f64>,
    ) -> Vec<f64> {
        PolicyNet::backward(self, pass, dlogits, dvalues).0
    }

    fn params(&self) -> Vec<f64> {
        PolicyNet::params(self)
    }

    fn set_params(&mut self, flat: &[f64]) -> Result<(), PolicyError> {
        PolicyNet::set_params(self, flat)
    }
}

/// One mode of the shared stack as a trainable unit. Updates touch the
/// trunk and that mode's branch; the other branches are untouched but see
/// the moved trunk.
pub struct ModeNet<'a> {
    pub stack: &'a mut LowLevelPolicies,
    pub mode: Mode,
}

impl TrainableNet for ModeNet<'_> {
    fn input_width(&self) -> usize {
        self.stack.input_width
    }

    fn head_spec(&self) -> Vec<usize> {
        LOW_LEVEL_HEAD_SPEC.to_vec()
    }

    fn forward(&self, obs: ArrayView2<f64>) -> Result<ForwardPass, PolicyError> {
        self.stack.forward_mode(self.mode, obs)
    }

    fn backward(
        &self,
        pass: &ForwardPass,
        dlogits: &[Array2<f64>],
        dvalues: ArrayView1<f64>,
    ) -> Vec<f64> {
        self.stack.backward_mode(self.mode, pass, dlogits, dvalues)
    }

    fn params(&self) -> Vec<f64> {
        self.stack.mode_params(self.mode)
    }

    fn set_params(&mut self, flat: &[f64]) -> Result<(), PolicyError> {
        self.stack.set_mode_params(self.mode, flat)
    }
}

/// Sample-mean statistics over all minibatches of one update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    /// Mean of `logp_old - logp_new`, a cheap KL divergence estimate.
    pub approx_kl: f64,
    /// Fraction of samples whose probability ratio left the clip band.
    pub clip_fraction: f64,
    pub total_loss: f64,
}

/// Pessimistic clipped objective for one sample. Returns the objective and
/// its gradient w.r.t. the new joint log-probability.
fn clipped_surrogate(ratio: f64, advantage: f64, clip: f64) -> (f64, f64) {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * advantage;
    if unclipped <= clipped {
        // d(exp(logp - logp_old) * A)/dlogp = ratio * A
        (unclipped, ratio * advantage)
    } else {
        (clipped, 0.0)
    }
}

/// Batch-normalized advantages: zero mean, unit variance across the whole
/// collected batch.
fn normalized_advantages(steps: &[&Transition]) -> Vec<f64> {
    let n = steps.len() as f64;
    let mean = steps.iter().map(|s| s.advantage).sum::<f64>() / n;
    let var = steps
        .iter()
        .map(|s| (s.advantage - mean).powi(2))
        .sum::<f64>()
        / n;
    let std = var.sqrt();
    steps
        .iter()
        .map(|s| (s.advantage - mean) / (std + 1e-8))
        .collect()
}

struct MinibatchResult {
    n: usize,
    policy_loss_sum: f64,
    value_loss_sum: f64,
    entropy_sum: f64,
    kl_sum: f64,
    clipped: usize,
    grads: Vec<f64>,
}

impl MinibatchResult {
    fn total_loss(&self, cfg: &PpoConfig) -> f64 {
        (self.policy_loss_sum + cfg.value_coef * self.value_loss_sum
            - cfg.entropy_coef * self.entropy_sum)
            / self.n as f64
    }
}

fn demote_non_finite(err: PolicyError) -> TrainError {
    match err {
        PolicyError::NonFinite(msg) => TrainError::Divergence(msg),
        other => TrainError::Policy(other),
    }
}

/// PPO loss and gradients on one minibatch, without touching the network.
fn minibatch_backward(
    net: &dyn TrainableNet,
    steps: &[&Transition],
    advantages: &[f64],
    cfg: &PpoConfig,
) -> Result<MinibatchResult, TrainError> {
    let b = steps.len();
    let head_spec = net.head_spec();
    let mut obs = Array2::zeros((b, net.input_width()));
    for (r, s) in steps.iter().enumerate() {
        obs.row_mut(r).assign(&ArrayView1::from(&s.obs[..]));
    }
    let pass = net.forward(obs.view()).map_err(demote_non_finite)?;

    let mut dlogits: Vec<Array2<f64>> =
        head_spec.iter().map(|&k| Array2::zeros((b, k))).collect();
    let mut dvalues = Array1::zeros(b);
    let scale = 1.0 / b as f64;

    let mut out = MinibatchResult {
        n: b,
        policy_loss_sum: 0.0,
        value_loss_sum: 0.0,
        entropy_sum: 0.0,
        kl_sum: 0.0,
        clipped: 0,
        grads: Vec::new(),
    };

    for (r, (s, &adv)) in steps.iter().zip(advantages).enumerate() {
        let rows = pass.logit_rows(r);
        let mut logp_new = 0.0;
        let mut head_probs = Vec::with_capacity(rows.len());
        for ((row, allowed), &a) in rows.iter().zip(&s.mask.heads).zip(&s.actions) {
            if a >= allowed.len() || !allowed[a] {
                return Err(TrainError::Setup(format!(
                    "recorded action {a} is masked out"
                )));
            }
            let probs = masked_probs(*row, allowed).map_err(demote_non_finite)?;
            logp_new += probs[a].ln();
            head_probs.push(probs);
        }
        let ratio = (logp_new - s.log_prob).exp();
        let (objective, dobj_dlogp) = clipped_surrogate(ratio, adv, cfg.clip);
        let v = pass.values[r];
        let v_err = v - s.ret;
        let entropy: f64 = head_probs.iter().map(|p| head_entropy(p)).sum();

        out.policy_loss_sum += -objective;
        out.value_loss_sum += 0.5 * v_err * v_err;
        out.entropy_sum += entropy;
        out.kl_sum += s.log_prob - logp_new;
        if (ratio - 1.0).abs() > cfg.clip {
            out.clipped += 1;
        }

        let dlogp = -dobj_dlogp * scale;
        for ((dl, probs), &a) in dlogits.iter_mut().zip(&head_probs).zip(&s.actions) {
            let h_ent = head_entropy(probs);
            for (j, &p) in probs.iter().enumerate() {
                let onehot = if j == a { 1.0 } else { 0.0 };
                let mut g = dlogp * (onehot - p);
                if p > 0.0 {
                    g += cfg.entropy_coef * scale * p * (p.ln() + h_ent);
                }
                dl[(r, j)] += g;
            }
        }
        dvalues[r] = cfg.value_coef * v_err * scale;
    }

    if !out.total_loss(cfg).is_finite() {
        return Err(TrainError::Divergence(format!(
            "non-finite minibatch loss {}",
            out.total_loss(cfg)
        )));
    }
    out.grads = net.backward(&pass, &dlogits, dvalues.view());
    Ok(out)
}

/// The mean clipped-surrogate objective of `net` on a collected batch,
/// using the same advantage normalization as [`ppo_update`].
pub fn surrogate_objective(
    net: &dyn TrainableNet,
    buffer: &RolloutBuffer,
    clip: f64,
) -> Result<f64, TrainError> {
    let steps: Vec<&Transition> = buffer.steps().collect();
    if steps.is_empty() {
        return Err(TrainError::Setup("empty rollout buffer".into()));
    }
    let advantages = normalized_advantages(&steps);
    let mut obs = Array2::zeros((steps.len(), net.input_width()));
    for (r, s) in steps.iter().enumerate() {
        obs.row_mut(r).assign(&ArrayView1::from(&s.obs[..]));
    }
    let pass = net.forward(obs.view()).map_err(demote_non_finite)?;
    let mut total = 0.0;
    for (r, (s, &adv)) in steps.iter().zip(&advantages).enumerate() {
        let rows = pass.logit_rows(r);
        let mut logp_new = 0.0;
        for ((row, allowed), &a) in rows.iter().zip(&s.mask.heads).zip(&s.actions) {
            let probs = masked_probs(*row, allowed).map_err(demote_non_finite)?;
            logp_new += probs[a].ln();
        }
        let ratio = (logp_new - s.log_prob).exp();
        total += clipped_surrogate(ratio, adv, clip).0;
    }
    Ok(total / steps.len() as f64)
}

/// Total PPO loss (clipped surrogate + value + entropy terms) and its
/// analytic gradient, treating the whole buffer as one minibatch with
/// batch-normalized advantages. This is the entry point for
/// finite-difference gradient checks; [`ppo_update`] runs the same math
/// per minibatch.
pub fn batch_loss_and_grads(
    net: &dyn TrainableNet,
    buffer: &RolloutBuffer,
    cfg: &PpoConfig,
) -> Result<(f64, Vec<f64>), TrainError> {
    let steps: Vec<&Transition> = buffer.steps().collect();
    if steps.is_empty() {
        return Err(TrainError::Setup("empty rollout buffer".into()));
    }
    let advantages = normalized_advantages(&steps);
    let result = minibatch_backward(net, &steps, &advantages, cfg)?;
    Ok((result.total_loss(cfg), result.grads))
}

/// One PPO update: several shuffled epochs of clipped-surrogate minibatch
/// steps over the collected batch. Advantages are normalized across the
/// batch once. A non-finite loss or parameter aborts with
/// [`TrainError::Divergence`].
pub fn ppo_update(
    net: &mut dyn TrainableNet,
    buffer: &RolloutBuffer,
    cfg: &PpoConfig,
    adam: &mut Adam,
    rng: &mut ChaCha8Rng,
) -> Result<UpdateStats, TrainError> {
    let steps: Vec<&Transition> = buffer.steps().collect();
    if steps.is_empty() {
        return Err(TrainError::Setup("empty rollout buffer".into()));
    }
    let head_spec = net.head_spec();
    for s in &steps {
        if s.obs.len() != net.input_width() {
            return Err(TrainError::Setup(format!(
                "observation width {} vs network input {}",
                s.obs.len(),
                net.input_width()
            )));
        }
        if s.actions.len() != head_spec.len() {
            return Err(TrainError::Setup(format!(
                "{} recorded action heads vs {} network heads",
                s.actions.len(),
                head_spec.len()
            )));
        }
    }
    let advantages = normalized_advantages(&steps);

    let mut n_total = 0usize;
    let mut policy_loss = 0.0;
    let mut value_loss = 0.0;
    let mut entropy = 0.0;
    let mut kl = 0.0;
    let mut clipped = 0usize;
    let mut total_loss = 0.0;

    let mut indices: Vec<usize> = (0..steps.len()).collect();
    for _ in 0..cfg.epochs {
        indices.shuffle(rng);
        for chunk in indices.chunks(cfg.minibatch_size) {
            let mb_steps: Vec<&Transition> = chunk.iter().map(|&i| steps[i]).collect();
            let mb_advs: Vec<f64> = chunk.iter().map(|&i| advantages[i]).collect();
            let result = minibatch_backward(net, &mb_steps, &mb_advs, cfg)?;

            let mut params = net.params();
            adam.step(&mut params, &result.grads);
            if params.iter().any(|p| !p.is_finite()) {
                return Err(TrainError::Divergence(
                    "non-finite parameters after update".into(),
                ));
            }
            net.set_params(&params)?;

            n_total += result.n;
            policy_loss += result.policy_loss_sum;
            value_loss += result.value_loss_sum;
            entropy += result.entropy_sum;
            kl += result.kl_sum;
            clipped += result.clipped;
            total_loss += result.total_loss(cfg) * result.n as f64;
        }
    }

    let n = n_total as f64;
    Ok(UpdateStats {
        policy_loss: policy_loss / n,
        value_loss: value_loss / n,
        entropy: entropy / n,
        approx_kl: kl / n,
        clip_fraction: clipped as f64 / n,
        total_loss: total_loss / n,
    })
}
