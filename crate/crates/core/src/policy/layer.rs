use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// One dense layer, weights stored (out, in).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; the log argument is kept strictly positive.
    let u1: f64 = loop {
        let u = rng.random::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Gram-Schmidt over the rows of `m` (rows must not exceed columns).
fn orthonormalize_rows(m: &mut Array2<f64>) {
    let rows = m.nrows();
    for i in 0..rows {
        for j in 0..i {
            let dot = m.row(i).dot(&m.row(j));
            let prev = m.row(j).to_owned();
            let mut row = m.row_mut(i);
            row.scaled_add(-dot, &prev);
        }
        let norm = m.row(i).dot(&m.row(i)).sqrt();
        if norm > 1e-12 {
            m.row_mut(i).mapv_inplace(|v| v / norm);
        }
    }
}

impl DenseLayer {
    /// Orthogonal initialization: Gaussian fill, orthonormalize along the
    /// smaller dimension, scale by `gain`. Biases start at zero.
    pub fn orthogonal(out: usize, input: usize, gain: f64, rng: &mut ChaCha8Rng) -> Self {
        let transpose = out > input;
        let (r, c) = if transpose { (input, out) } else { (out, input) };
        let mut m = Array2::from_shape_fn((r, c), |_| standard_normal(rng));
        orthonormalize_rows(&mut m);
        let w = if transpose { m.t().to_owned() * gain } else { m * gain };
        Self { w, b: Array1::zeros(out) }
    }

    pub fn zeros(out: usize, input: usize) -> Self {
        Self { w: Array2::zeros((out, input)), b: Array1::zeros(out) }
    }

    pub fn out_width(&self) -> usize {
        self.w.nrows()
    }

    pub fn in_width(&self) -> usize {
        self.w.ncols()
    }

    /// Affine map over a batch of rows: X W^T + b.
    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.w.t()) + &self.b
    }

    pub fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }

    pub fn write_params(&self, out: &mut Vec<f64>) {
        out.extend(self.w.iter());
        out.extend(self.b.iter());
    }

    /// Reads parameters back in [`Self::write_params`] order; returns how
    /// many values were consumed.
    pub fn read_params(&mut self, data: &[f64]) -> usize {
        let nw = self.w.len();
        let nb = self.b.len();
        for (dst, src) in self.w.iter_mut().zip(&data[..nw]) {
            *dst = *src;
        }
        for (dst, src) in self.b.iter_mut().zip(&data[nw..nw + nb]) {
            *dst = *src;
        }
        nw + nb
    }

    pub fn scaled_add(&mut self, factor: f64, other: &DenseLayer) {
        self.w.scaled_add(factor, &other.w);
        self.b.scaled_add(factor, &other.b);
    }

    pub fn fill(&mut self, value: f64) {
        self.w.fill(value);
        self.b.fill(value);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn orthogonal_rows_are_orthonormal_scaled() {
        let mut rng = substream(1, "layer", 0);
        let gain = std::f64::consts::SQRT_2;
        let l = DenseLayer::orthogonal(4, 9, gain, &mut rng);
        for i in 0..4 {
            for j in 0..4 {
                let dot = l.w.row(i).dot(&l.w.row(j));
                let want = if i == j { gain * gain } else { 0.0 };
                assert_abs_diff_eq!(dot, want, epsilon = 1e-10);
            }
        }
        assert!(l.b.iter().all(|v| *v == 0.0));

        // Tall matrix: columns orthonormal instead.
        let l = DenseLayer::orthogonal(9, 4, 1.0, &mut rng);
        for i in 0..4 {
            for j in 0..4 {
                let dot = l.w.column(i).dot(&l.w.column(j));
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(dot, want, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn forward_matches_hand_computed_affine() {
        let l = DenseLayer {
            w: array![[1.0, 2.0], [0.5, -1.0], [0.0, 3.0]],
            b: array![0.1, -0.2, 0.0],
        };
        let x = array![[2.0, 1.0]];
        let y = l.forward(x.view());
        assert_abs_diff_eq!(y[[0, 0]], 4.1, epsilon = 1e-15);
        assert_abs_diff_eq!(y[[0, 1]], -0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(y[[0, 2]], 3.0, epsilon = 1e-15);
    }

    #[test]
    fn param_round_trip() {
        let mut rng = substream(2, "layer", 0);
        let l = DenseLayer::orthogonal(3, 5, 1.0, &mut rng);
        let mut flat = Vec::new();
        l.write_params(&mut flat);
        assert_eq!(flat.len(), l.param_count());
        let mut l2 = DenseLayer::zeros(3, 5);
        assert_eq!(l2.read_params(&flat), flat.len());
        assert_eq!(l, l2);
    }

    #[test]
    fn normals_have_sane_moments() {
        let mut rng = substream(3, "layer", 0);
        let n = 200_000;
        let samples: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }
}
