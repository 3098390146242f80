//! Masked multi-head categorical distributions over logits.

use ndarray::ArrayView1;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::PolicyError;
use crate::engine::AircraftState;

/// Per-head permission vectors; a masked entry has probability exactly zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionMask {
    pub heads: Vec<Vec<bool>>,
}

impl ActionMask {
    pub fn allow_all(head_spec: &[usize]) -> Self {
        Self { heads: head_spec.iter().map(|&k| vec![true; k]).collect() }
    }

    /// Mask for the low-level action heads (heading, speed, cannon,
    /// rocket): trigger pulls are only offered while the weapon has rounds
    /// left, which also keeps rocket-less AC2 from ever selecting a launch.
    pub fn for_aircraft(head_spec: &[usize], craft: &AircraftState) -> Self {
        let mut mask = Self::allow_all(head_spec);
        if head_spec.len() == 4 {
            if craft.cannon_remaining == 0 {
                mask.heads[2][1] = false;
            }
            if craft.rockets_remaining == 0 {
                mask.heads[3][1] = false;
            }
        }
        mask
    }

    pub fn validate(&self, head_spec: &[usize]) -> Result<(), PolicyError> {
        if self.heads.len() != head_spec.len() {
            return Err(PolicyError::InvalidMask(format!(
                "{} mask heads for {} logit heads",
                self.heads.len(),
                head_spec.len()
            )));
        }
        for (i, (head, &k)) in self.heads.iter().zip(head_spec).enumerate() {
            if head.len() != k {
                return Err(PolicyError::InvalidMask(format!(
                    "head {i}: mask width {} vs cardinality {k}",
                    head.len()
                )));
            }
            if !head.iter().any(|&a| a) {
                return Err(PolicyError::InvalidMask(format!("head {i}: nothing permitted")));
            }
        }
        Ok(())
    }
}

/// Probabilities of one masked softmax head. Masked entries are exactly 0.
pub fn masked_probs(logits: ArrayView1<f64>, allowed: &[bool]) -> Result<Vec<f64>, PolicyError> {
    if logits.len() != allowed.len() {
        return Err(PolicyError::ShapeMismatch(format!(
            "{} logits vs {} mask entries",
            logits.len(),
            allowed.len()
        )));
    }
    let mut max = f64::NEG_INFINITY;
    for (l, &a) in logits.iter().zip(allowed) {
        if a {
            if !l.is_finite() {
                return Err(PolicyError::NonFinite(format!("logit {l}")));
            }
            max = max.max(*l);
        }
    }
    if max == f64::NEG_INFINITY {
        return Err(PolicyError::InvalidMask("nothing permitted".into()));
    }
    let mut z = 0.0;
    let exps: Vec<f64> = logits
        .iter()
        .zip(allowed)
        .map(|(l, &a)| if a { (l - max).exp() } else { 0.0 })
        .collect();
    for e in &exps {
        z += e;
    }
    Ok(exps.into_iter().map(|e| e / z).collect())
}

/// Entropy of one masked head in nats.
pub fn head_entropy(probs: &[f64]) -> f64 {
    probs
        .iter()
        .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 })
        .sum()
}

/// Samples every head independently; returns the per-head indices and the
/// joint log-probability.
pub fn sample_heads(
    logits: &[ArrayView1<f64>],
    mask: &ActionMask,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<usize>, f64), PolicyError> {
    if logits.len() != mask.heads.len() {
        return Err(PolicyError::ShapeMismatch(format!(
            "{} logit heads vs {} mask heads",
            logits.len(),
            mask.heads.len()
        )));
    }
    let mut indices = Vec::with_capacity(logits.len());
    let mut logp = 0.0;
    for (head_logits, allowed) in logits.iter().zip(&mask.heads) {
        let probs = masked_probs(*head_logits, allowed)?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = None;
        for (i, &p) in probs.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            if u < acc {
                chosen = Some(i);
                break;
            }
        }
        // Float round-off can leave acc marginally below 1; fall back to
        // the last permitted index.
        let i = match chosen {
            Some(i) => i,
            None => probs
                .iter()
                .rposition(|&p| p > 0.0)
                .expect("validated mask has a permitted entry"),
        };
        indices.push(i);
        logp += probs[i].ln();
    }
    Ok((indices, logp))
}

/// Joint log-probability of `actions` and total entropy across heads.
pub fn log_prob_and_entropy(
    logits: &[ArrayView1<f64>],
    mask: &ActionMask,
    actions: &[usize],
) -> Result<(f64, f64), PolicyError> {
    if actions.len() != logits.len() || logits.len() != mask.heads.len() {
        return Err(PolicyError::ShapeMismatch(format!(
            "{} actions, {} logit heads, {} mask heads",
            actions.len(),
            logits.len(),
            mask.heads.len()
        )));
    }
    let mut logp = 0.0;
    let mut entropy = 0.0;
    for ((head_logits, allowed), &a) in logits.iter().zip(&mask.heads).zip(actions) {
        if a >= allowed.len() || !allowed[a] {
            return Err(PolicyError::MaskedAction(format!("index {a} not permitted")));
        }
        let probs = masked_probs(*head_logits, allowed)?;
        logp += probs[a].ln();
        entropy += head_entropy(&probs);
    }
    Ok((logp, entropy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{spawn_scenario, AircraftType, ScenarioConfig};
    use crate::rng::substream;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array1};

    #[test]
    fn uniform_head_sampling_is_uniform() {
        let logits = Array1::zeros(3);
        let views = [logits.view()];
        let mask = ActionMask::allow_all(&[3]);
        let mut rng = substream(7, "dist", 0);
        let mut counts = [0u32; 3];
        let n = 100_000;
        for _ in 0..n {
            let (idx, logp) = sample_heads(&views, &mask, &mut rng).unwrap();
            counts[idx[0]] += 1;
            assert_abs_diff_eq!(logp, (1.0f64 / 3.0).ln(), epsilon = 1e-12);
        }
        for c in counts {
            let frac = f64::from(c) / f64::from(n);
            assert!((frac - 1.0 / 3.0).abs() < 0.01, "fraction {frac}");
        }
    }

    #[test]
    fn masked_entry_never_sampled_and_exactly_zero() {
        let logits = array![5.0, 1.0];
        let views = [logits.view()];
        let mask = ActionMask { heads: vec![vec![false, true]] };
        let probs = masked_probs(logits.view(), &mask.heads[0]).unwrap();
        assert_eq!(probs[0], 0.0);
        assert_eq!(probs[1], 1.0);
        let mut rng = substream(8, "dist", 0);
        for _ in 0..1000 {
            let (idx, _) = sample_heads(&views, &mask, &mut rng).unwrap();
            assert_eq!(idx[0], 1);
        }
    }

    #[test]
    fn giant_logit_dominates() {
        let logits = array![0.0, 50.0, 0.0];
        let views = [logits.view()];
        let mask = ActionMask::allow_all(&[3]);
        let mut rng = substream(9, "dist", 0);
        for _ in 0..1000 {
            let (idx, _) = sample_heads(&views, &mask, &mut rng).unwrap();
            assert_eq!(idx[0], 1);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = substream(10, "dist", 0);
        use rand::Rng;
        for _ in 0..500 {
            let k = 2 + (rng.random::<u32>() % 12) as usize;
            let logits = Array1::from_shape_fn(k, |_| rng.random::<f64>() * 20.0 - 10.0);
            let mut allowed: Vec<bool> = (0..k).map(|_| rng.random::<f64>() < 0.7).collect();
            if !allowed.iter().any(|&a| a) {
                allowed[0] = true;
            }
            let probs = masked_probs(logits.view(), &allowed).unwrap();
            let sum: f64 = probs.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "sum {sum}");
        }
    }

    /// Brute-force masked softmax over the permitted subset.
    fn enumeration_oracle(logits: &Array1<f64>, allowed: &[bool]) -> (Vec<f64>, f64) {
        let z: f64 = logits
            .iter()
            .zip(allowed)
            .filter(|(_, &a)| a)
            .map(|(l, _)| l.exp())
            .sum();
        let probs: Vec<f64> = logits
            .iter()
            .zip(allowed)
            .map(|(l, &a)| if a { l.exp() / z } else { 0.0 })
            .collect();
        let h = probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
        (probs, h)
    }

    #[test]
    fn matches_enumeration_oracle() {
        let mut rng = substream(11, "dist", 0);
        use rand::Rng;
        for _ in 0..2000 {
            let k = 2 + (rng.random::<u32>() % 8) as usize;
            let logits = Array1::from_shape_fn(k, |_| rng.random::<f64>() * 8.0 - 4.0);
            let mut allowed: Vec<bool> = (0..k).map(|_| rng.random::<f64>() < 0.6).collect();
            if !allowed.iter().any(|&a| a) {
                allowed[k - 1] = true;
            }
            let (want_probs, want_h) = enumeration_oracle(&logits, &allowed);
            let probs = masked_probs(logits.view(), &allowed).unwrap();
            for (got, want) in probs.iter().zip(&want_probs) {
                assert_abs_diff_eq!(got, want, epsilon = 1e-12);
            }
            let action = allowed.iter().position(|&a| a).unwrap();
            let mask = ActionMask { heads: vec![allowed.clone()] };
            let (logp, h) =
                log_prob_and_entropy(&[logits.view()], &mask, &[action]).unwrap();
            assert_abs_diff_eq!(logp, want_probs[action].ln(), epsilon = 1e-12);
            assert_abs_diff_eq!(h, want_h, epsilon = 1e-12);
        }
    }

    #[test]
    fn uniform_and_deterministic_entropy() {
        let logits = Array1::zeros(3);
        let mask = ActionMask::allow_all(&[3]);
        let (logp, h) = log_prob_and_entropy(&[logits.view()], &mask, &[2]).unwrap();
        assert_abs_diff_eq!(logp, (1.0f64 / 3.0).ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(h, 3.0f64.ln(), epsilon = 1e-14);

        let sharp = array![0.0, 500.0];
        let mask = ActionMask::allow_all(&[2]);
        let (_, h) = log_prob_and_entropy(&[sharp.view()], &mask, &[1]).unwrap();
        assert_abs_diff_eq!(h, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn masked_action_query_is_an_error() {
        let logits = array![1.0, 2.0];
        let mask = ActionMask { heads: vec![vec![true, false]] };
        assert!(matches!(
            log_prob_and_entropy(&[logits.view()], &mask, &[1]),
            Err(PolicyError::MaskedAction(_))
        ));
    }

    #[test]
    fn all_masked_head_rejected() {
        let mask = ActionMask { heads: vec![vec![false, false]] };
        assert!(mask.validate(&[2]).is_err());
        let logits = array![1.0, 2.0];
        assert!(matches!(
            masked_probs(logits.view(), &[false, false]),
            Err(PolicyError::InvalidMask(_))
        ));
    }

    #[test]
    fn aircraft_mask_tracks_weapon_state() {
        let mut config = ScenarioConfig::new(1, 1, 12);
        config.composition = crate::engine::Composition::Heterogeneous;
        let mut world = spawn_scenario(&config).unwrap();
        world.aircraft[0].aircraft_type = AircraftType::Ac2;
        world.aircraft[0].rockets_remaining = 0;
        let spec = [13, 9, 2, 2];
        let mask = ActionMask::for_aircraft(&spec, &world.aircraft[0]);
        assert!(!mask.heads[3][1]);
        assert!(mask.heads[2][1]);
        mask.validate(&spec).unwrap();

        world.aircraft[0].cannon_remaining = 0;
        let mask = ActionMask::for_aircraft(&spec, &world.aircraft[0]);
        assert!(!mask.heads[2][1]);
    }
}
