use super::{power_iteration, BlockTracker, Curvature, FiniteSumObjective, KroneckerH, QuadraticTracker, SmoothObjective};
use crate::Mat;

/// Hyperbolic eigenvalue objective `f(X) = −tr(XᵀDᵀDX)`.
///
/// As a finite sum over the `m` data rows, `f_i(X) = −m‖D_{i,:}X‖²`.
/// The objective is concave, so `H = 0` is a valid curvature description;
/// [`SmoothObjective::lipschitz`] reports `2‖DᵀD‖₂` for the scalar majorizer.
#[derive(Debug, Clone)]
pub struct Hevp {
    data: Mat,
    /// `−2DᵀD`, the `C` factor of `f = ½ tr(XᵀCX)`.
    neg2_gram: Mat,
    lipschitz: f64,
}

pub fn hevp_objective(data: Mat) -> Hevp {
    let gram = data.transpose() * &data;
    let lipschitz = 2.0 * power_iteration(&gram, 200);
    Hevp { neg2_gram: gram * -2.0, data, lipschitz }
}

impl Hevp {
    pub fn data(&self) -> &Mat {
        &self.data
    }
}

impl SmoothObjective for Hevp {
    fn dim(&self) -> usize {
        self.data.ncols()
    }

    fn value(&self, x: &Mat) -> f64 {
        let dx = &self.data * x;
        -dx.norm_squared()
    }

    fn gradient(&self, x: &Mat) -> Mat {
        &self.neg2_gram * x
    }

    fn curvature(&self) -> Curvature {
        Curvature::Kronecker(KroneckerH::Zero)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn tracker(&self, x: &Mat) -> Option<Box<dyn BlockTracker + '_>> {
        Some(Box::new(QuadraticTracker::new(&self.neg2_gram, None, x)))
    }
}

impl FiniteSumObjective for Hevp {
    fn n_terms(&self) -> usize {
        self.data.nrows()
    }

    fn value_term(&self, i: usize, x: &Mat) -> f64 {
        let m = self.data.nrows() as f64;
        -m * (self.data.row(i) * x).norm_squared()
    }

    fn gradient_term(&self, i: usize, x: &Mat) -> Mat {
        let m = self.data.nrows() as f64;
        let row = self.data.row(i);
        let rx = &row * x;
        row.transpose() * rx * (-2.0 * m)
    }

    fn minibatch_gradient(&self, batch: &[usize], x: &Mat) -> Mat {
        let n = self.dim();
        if batch.is_empty() {
            return Mat::zeros(n, n);
        }
        let m = self.data.nrows() as f64;
        let rows = Mat::from_fn(batch.len(), n, |r, c| self.data[(batch[r], c)]);
        let rx = &rows * x;
        rows.transpose() * rx * (-2.0 * m / batch.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::testing::{fd_gradient, gaussian};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_values() {
        let h = hevp_objective(Mat::identity(2, 2));
        let x = Mat::identity(2, 2);
        assert_eq!(h.value(&x), -2.0);
        assert_eq!(h.gradient(&x), Mat::identity(2, 2) * -2.0);

        // DᵀD = diag(3, 1)
        let d = Mat::from_row_slice(2, 2, &[3f64.sqrt(), 0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(hevp_objective(d).value(&Mat::identity(2, 2)), -4.0, epsilon = 1e-12);
    }

    #[test]
    fn gradient_matches_fd_and_finite_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = gaussian(5, 4, &mut rng);
        let h = hevp_objective(d);
        let x = gaussian(4, 4, &mut rng);
        let g = h.gradient(&x);
        assert!((&g - fd_gradient(&h, &x, 1e-5)).amax() <= 1e-5 * (1.0 + g.amax()));

        let all: Vec<usize> = (0..5).collect();
        assert!((h.minibatch_gradient(&all, &x) - &g).amax() <= 1e-10);
        let mut mean = Mat::zeros(4, 4);
        for i in 0..5 {
            mean += h.gradient_term(i, &x);
        }
        assert!((mean / 5.0 - &g).amax() <= 1e-10);
        let vmean: f64 = (0..5).map(|i| h.value_term(i, &x)).sum::<f64>() / 5.0;
        assert_abs_diff_eq!(vmean, h.value(&x), epsilon = 1e-10);
        let batch = [1, 1, 3];
        let manual = (h.gradient_term(1, &x) * 2.0 + h.gradient_term(3, &x)) / 3.0;
        assert!((h.minibatch_gradient(&batch, &x) - manual).amax() <= 1e-10);
    }

    #[test]
    fn lipschitz_is_twice_gram_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = gaussian(7, 4, &mut rng);
        let gram = d.transpose() * &d;
        let top = gram.symmetric_eigenvalues().max();
        assert_abs_diff_eq!(hevp_objective(d).lipschitz(), 2.0 * top, epsilon = 1e-8 * top);
    }
}
