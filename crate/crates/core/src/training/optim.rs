/// Adam over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(learning_rate: f64, param_count: usize) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            t: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    /// One descent step in place. `grads` is the gradient of the loss.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len(), "parameter count changed");
        assert_eq!(grads.len(), self.m.len(), "gradient count mismatch");
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_quadratic() {
        let target = [3.0, -1.5, 0.25];
        let mut params = vec![0.0; 3];
        let mut adam = Adam::new(0.05, 3);
        for _ in 0..2000 {
            let grads: Vec<f64> = params
                .iter()
                .zip(&target)
                .map(|(p, t)| 2.0 * (p - t))
                .collect();
            adam.step(&mut params, &grads);
        }
        for (p, t) in params.iter().zip(&target) {
            assert!((p - t).abs() < 1e-4, "got {p}, want {t}");
        }
    }

    #[test]
    fn first_step_size_is_learning_rate() {
        // Bias correction makes the first update ~lr regardless of the
        // gradient magnitude.
        for scale in [1e-4, 1.0, 1e4] {
            let mut params = vec![0.0];
            let mut adam = Adam::new(0.01, 1);
            adam.step(&mut params, &[scale]);
            assert!(
                (params[0] + 0.01).abs() < 1e-6,
                "scale {scale} moved to {}",
                params[0]
            );
        }
    }

    #[test]
    fn zero_gradient_leaves_params_fixed() {
        let mut params = vec![1.0, 2.0];
        let mut adam = Adam::new(0.1, 2);
        for _ in 0..5 {
            adam.step(&mut params, &[0.0, 0.0]);
        }
        assert_eq!(params, vec![1.0, 2.0]);
    }
}
