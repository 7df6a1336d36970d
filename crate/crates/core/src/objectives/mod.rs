//! Smooth objectives over `n×n` matrices.
//!
//! An objective exposes its value, Euclidean gradient and a description of
//! its curvature, which is what the block majorizer needs: either a Kronecker
//! factorization `H = D ⊗ C` with `f(X⁺) ≤ f(X) + ⟨X⁺−X, ∇f(X)⟩ + ½‖X⁺−X‖²_H`,
//! or just a Lipschitz constant of the gradient.

mod hevp;
mod hspp;
mod quadratic;

pub use hevp::{hevp_objective, Hevp};
pub use hspp::{
    diffeomorphism_phi, euclidean_distance_matrix, hspp_objective, indefinite_inner, ultrahyperbolic_distance,
    Hspp,
};
pub use quadratic::{quadratic_objective, Quadratic};

use nalgebra::Matrix2;

use crate::jorth::BlockPair;
use crate::Mat;

/// Kronecker description of the curvature matrix `H`.
#[derive(Debug, Clone)]
pub enum KroneckerH {
    /// `H = 0`, valid for concave objectives.
    Zero,
    /// `H = D ⊗ C` with symmetric `C`, `D`, so `‖Y‖²_H = tr(YᵀCYD)`.
    Factors { c: Mat, d: Mat },
}

#[derive(Debug, Clone)]
pub enum Curvature {
    Kronecker(KroneckerH),
    LipschitzBound(f64),
}

pub trait SmoothObjective: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &Mat) -> f64;

    fn gradient(&self, x: &Mat) -> Mat;

    fn curvature(&self) -> Curvature;

    /// Upper estimate of the gradient Lipschitz constant, used for the
    /// scalar majorizer `Q = ςI`.
    fn lipschitz(&self) -> f64;

    /// Incremental evaluator for objectives whose value and block gradients
    /// can be updated in `O(n²)` per block step.
    fn tracker(&self, _x: &Mat) -> Option<Box<dyn BlockTracker + '_>> {
        None
    }
}

/// Maintains `f(X)` and enough state to produce `[∇f(X)Xᵀ]_BB` cheaply while
/// `X` changes two rows at a time.
pub trait BlockTracker {
    fn value(&self) -> f64;

    /// `[∇f(X)Xᵀ]_BB` for the current `X`.
    fn block_gradient(&self, x: &Mat, b: BlockPair) -> Matrix2<f64>;

    /// Records that rows `B` of `x_old` were replaced by `V·X(B,:)`. Called
    /// before the caller mutates its copy of `X`.
    fn apply(&mut self, x_old: &Mat, b: BlockPair, v: &Matrix2<f64>);

    /// Recomputes everything from scratch at `x`.
    fn refresh(&mut self, x: &Mat);
}

/// `f(X) = (1/N) Σ_i f_i(X)`.
pub trait FiniteSumObjective: SmoothObjective {
    fn n_terms(&self) -> usize;

    fn value_term(&self, i: usize, x: &Mat) -> f64;

    fn gradient_term(&self, i: usize, x: &Mat) -> Mat;

    /// `(1/|S|) Σ_{i∈S} ∇f_i(X)`; indices may repeat.
    fn minibatch_gradient(&self, batch: &[usize], x: &Mat) -> Mat {
        let n = self.dim();
        let mut g = Mat::zeros(n, n);
        for &i in batch {
            g += self.gradient_term(i, x);
        }
        if !batch.is_empty() {
            g /= batch.len() as f64;
        }
        g
    }
}

/// `[G Xᵀ]_BB` from full matrices.
pub fn block_gradient(grad: &Mat, x: &Mat, b: BlockPair) -> Matrix2<f64> {
    let rows = [b.i, b.j];
    Matrix2::from_fn(|r, c| grad.row(rows[r]).dot(&x.row(rows[c])))
}

/// Tracker for `f(X) = ½ tr(XᵀCXD)` (with `D = I` when `d` is `None`).
/// Keeps `Y = CXD = ∇f(X)` and the value.
pub(crate) struct QuadraticTracker<'a> {
    c: &'a Mat,
    d: Option<&'a Mat>,
    y: Mat,
    value: f64,
}

impl<'a> QuadraticTracker<'a> {
    pub(crate) fn new(c: &'a Mat, d: Option<&'a Mat>, x: &Mat) -> Self {
        let mut t = Self { c, d, y: Mat::zeros(0, 0), value: 0.0 };
        t.refresh(x);
        t
    }
}

impl BlockTracker for QuadraticTracker<'_> {
    fn value(&self) -> f64 {
        self.value
    }

    fn block_gradient(&self, x: &Mat, b: BlockPair) -> Matrix2<f64> {
        block_gradient(&self.y, x, b)
    }

    fn apply(&mut self, x_old: &Mat, b: BlockPair, v: &Matrix2<f64>) {
        let n = x_old.ncols();
        let rows = [b.i, b.j];
        // ΔX_B = (V − I) X(B,:)
        let w = v - Matrix2::identity();
        let dx = Mat::from_fn(2, n, |r, c| w[(r, 0)] * x_old[(b.i, c)] + w[(r, 1)] * x_old[(b.j, c)]);
        let dxd = match self.d {
            Some(d) => &dx * d,
            None => dx.clone(),
        };
        // Δf = tr(ΔX_Bᵀ Y_B) + ½ tr(ΔX_Bᵀ C_BB ΔX_B D)
        let mut delta = 0.0;
        for (r, &k) in rows.iter().enumerate() {
            delta += dx.row(r).dot(&self.y.row(k));
            for (s, &l) in rows.iter().enumerate() {
                delta += 0.5 * self.c[(k, l)] * dx.row(r).dot(&dxd.row(s));
            }
        }
        self.value += delta;
        // Y += C(:,B) ΔX_B D
        for (s, &l) in rows.iter().enumerate() {
            let col = self.c.column(l);
            for cc in 0..n {
                let f = dxd[(s, cc)];
                if f != 0.0 {
                    self.y.column_mut(cc).axpy(f, &col, 1.0);
                }
            }
        }
    }

    fn refresh(&mut self, x: &Mat) {
        let cx = self.c * x;
        self.y = match self.d {
            Some(d) => cx * d,
            None => cx,
        };
        self.value = 0.5 * x.dot(&self.y);
    }
}

/// Largest-magnitude eigenvalue of a symmetric matrix by power iteration.
pub(crate) fn power_iteration(a: &Mat, iters: usize) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    // Deterministic start with all-nonzero entries.
    let mut v = nalgebra::DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.618_033_988_75).fract());
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..iters {
        let w = a * &v;
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        lambda = nw;
        v = w / nw;
    }
    lambda
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use rand::Rng;

    /// Central finite differences of `f` at `x`, entry by entry.
    pub fn fd_gradient<O: SmoothObjective + ?Sized>(obj: &O, x: &Mat, h: f64) -> Mat {
        let n = x.nrows();
        let mut g = Mat::zeros(n, n);
        let mut xp = x.clone();
        for i in 0..n {
            for j in 0..n {
                let orig = xp[(i, j)];
                xp[(i, j)] = orig + h;
                let fp = obj.value(&xp);
                xp[(i, j)] = orig - h;
                let fm = obj.value(&xp);
                xp[(i, j)] = orig;
                g[(i, j)] = (fp - fm) / (2.0 * h);
            }
        }
        g
    }

    pub fn gaussian<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Mat {
        Mat::from_fn(rows, cols, |_, _| rng.sample(rand_distr::StandardNormal))
    }

    pub fn random_symmetric<R: Rng>(n: usize, rng: &mut R) -> Mat {
        let g = gaussian(n, n, rng);
        (&g + g.transpose()) * 0.5
    }
}
