//! Hyperbolic structural probe: fit ultrahyperbolic geodesic distances of
//! linearly transformed, manifold-projected data rows to a target matrix.

use nalgebra::{DVector, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Curvature, FiniteSumObjective, SmoothObjective};
use crate::jorth::{givens_rotation, hyperbolic_rotation, sample_block};
use crate::{BlockKind, Error, JOrthMatrix, Mat, Result, Signature};

/// Half-width of the band around `|u| = 1` where the distance derivative is
/// taken as zero.
const KINK_BAND: f64 = 1e-8;

/// `⟨x, y⟩_q = Σ J_ii x_i y_i`.
pub fn indefinite_inner(x: &[f64], y: &[f64], sig: &Signature) -> f64 {
    x.iter().zip(y).zip(sig.diag()).map(|((a, b), s)| s * a * b).sum()
}

/// Ultrahyperbolic geodesic distance: with `u = ⟨x,y⟩_q / α²`, returns
/// `α·acosh|u|` when `|u| ≥ 1` and `α·acos|u|` otherwise.
pub fn ultrahyperbolic_distance(x: &[f64], y: &[f64], sig: &Signature, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
    }
    if x.len() != sig.n() || y.len() != sig.n() {
        return Err(Error::Dimension("vector length differs from signature".into()));
    }
    Ok(distance_from_inner(indefinite_inner(x, y, sig) / (alpha * alpha), alpha))
}

#[inline]
fn distance_from_inner(u: f64, alpha: f64) -> f64 {
    let au = u.abs();
    if au >= 1.0 {
        alpha * au.acosh()
    } else {
        alpha * au.acos()
    }
}

/// `∂d/∂u`, zero inside the kink band around `|u| = 1` and at `u = 0`.
#[inline]
fn distance_derivative(u: f64, alpha: f64) -> f64 {
    let au = u.abs();
    if (au - 1.0).abs() <= KINK_BAND || u == 0.0 {
        return 0.0;
    }
    let sign = u.signum();
    if au > 1.0 {
        alpha * sign / (au * au - 1.0).sqrt()
    } else {
        -alpha * sign / (1.0 - au * au).sqrt()
    }
}

/// Double projection onto `{x : ⟨x,x⟩_q = −α²}`: the head (positive
/// coordinates) `s` is kept and the tail `t` becomes `sqrt(α² + ‖s‖²)·t/‖t‖`.
pub fn diffeomorphism_phi(row: &[f64], sig: &Signature, alpha: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0) {
        return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
    }
    if row.len() != sig.n() {
        return Err(Error::Dimension("row length differs from signature".into()));
    }
    let head_sq: f64 = row.iter().zip(sig.diag()).filter(|(_, &s)| s > 0.0).map(|(v, _)| v * v).sum();
    let tail_norm: f64 =
        row.iter().zip(sig.diag()).filter(|(_, &s)| s < 0.0).map(|(v, _)| v * v).sum::<f64>().sqrt();
    if tail_norm == 0.0 {
        return Err(Error::DegenerateRow { row: 0, reason: "tail coordinates are all zero".into() });
    }
    let radius = (alpha * alpha + head_sq).sqrt();
    Ok(row
        .iter()
        .zip(sig.diag())
        .map(|(&v, &s)| if s > 0.0 { v } else { radius * v / tail_norm })
        .collect())
}

/// Pairwise Euclidean distances between the rows of `data`.
pub fn euclidean_distance_matrix(data: &Mat) -> Mat {
    let m = data.nrows();
    Mat::from_fn(m, m, |i, j| (data.row(i) - data.row(j)).norm())
}

/// `f(X) = (1/m²) Σ_{i,j} (T_ij − d_α(Q_i, Q_j))²` with `Q = φ(D)·X`.
///
/// The finite-sum split is over rows: `f_i = (1/m) Σ_j (T_ij − d_ij)²`.
#[derive(Debug, Clone)]
pub struct Hspp {
    phi: Mat,
    targets: Mat,
    alpha: f64,
    sig: Signature,
    lipschitz: f64,
}

/// Builds the probe objective. The Lipschitz estimate is the largest sampled
/// gradient-difference ratio over 50 nearby feasible pairs, doubled.
pub fn hspp_objective(data: &Mat, targets: Mat, alpha: f64, sig: Signature) -> Result<Hspp> {
    let (m, n) = (data.nrows(), data.ncols());
    if n != sig.n() {
        return Err(Error::Dimension(format!("data has {n} columns, signature has n = {}", sig.n())));
    }
    if targets.nrows() != m || targets.ncols() != m {
        return Err(Error::Dimension(format!("targets must be {m}x{m}")));
    }
    let asym = (&targets - targets.transpose()).amax();
    let diag = targets.diagonal().amax();
    if asym > 1e-12 * targets.amax().max(1.0) || diag > 1e-12 {
        return Err(Error::Parameter("targets must be symmetric with zero diagonal".into()));
    }
    let mut phi = Mat::zeros(m, n);
    for i in 0..m {
        let row: Vec<f64> = data.row(i).iter().copied().collect();
        let mapped = diffeomorphism_phi(&row, &sig, alpha).map_err(|e| match e {
            Error::DegenerateRow { reason, .. } => Error::DegenerateRow { row: i, reason },
            other => other,
        })?;
        phi.row_mut(i).copy_from_slice(&mapped);
    }
    let mut obj = Hspp { phi, targets, alpha, sig, lipschitz: 0.0 };
    obj.lipschitz = obj.sample_lipschitz(50, 0);
    Ok(obj)
}

impl Hspp {
    pub fn mapped_data(&self) -> &Mat {
        &self.phi
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `U = Q J Qᵀ / α²` for `Q = φ(D)X`.
    fn inner_products(&self, q: &Mat) -> Mat {
        let qj = self.sig.scale_cols(q);
        (qj * q.transpose()) / (self.alpha * self.alpha)
    }

    /// Weights `W_ij = scale·(d_ij − T_ij)·d'(u_ij)/α²` restricted to `rows`.
    fn weights(&self, u: &Mat, rows: impl Iterator<Item = usize>, scale: f64) -> Mat {
        let m = u.nrows();
        let mut w = Mat::zeros(m, m);
        let a2 = self.alpha * self.alpha;
        for i in rows {
            for j in 0..m {
                let uij = u[(i, j)];
                let d = distance_from_inner(uij, self.alpha);
                w[(i, j)] += scale * (d - self.targets[(i, j)]) * distance_derivative(uij, self.alpha) / a2;
            }
        }
        w
    }

    /// `∇ = Φᵀ (W + Wᵀ) Q J`.
    fn gradient_from_weights(&self, w: &Mat, q: &Mat) -> Mat {
        let sym = w + w.transpose();
        let qj = self.sig.scale_cols(q);
        self.phi.transpose() * (sym * qj)
    }

    fn sample_lipschitz(&self, pairs: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.sig.n();
        let mut best = 0.0f64;
        for _ in 0..pairs {
            let mut x = JOrthMatrix::identity(self.sig.clone());
            for _ in 0..2 * n {
                random_block_step(&mut x, &mut rng, 1.0);
            }
            let x0 = x.matrix().clone();
            random_block_step(&mut x, &mut rng, 0.1);
            let dx = (x.matrix() - &x0).norm();
            if dx > 0.0 {
                let dg = (self.gradient(x.matrix()) - self.gradient(&x0)).norm();
                best = best.max(dg / dx);
            }
        }
        2.0 * best
    }
}

fn random_block_step<R: Rng>(x: &mut JOrthMatrix, rng: &mut R, spread: f64) {
    if x.n() < 2 {
        return;
    }
    let b = sample_block(x.signature(), rng).expect("n >= 2");
    let angle = rng.random_range(-spread..spread);
    let v: Matrix2<f64> = match b.kind {
        BlockKind::Hyperbolic => hyperbolic_rotation(angle),
        BlockKind::Orthogonal => givens_rotation(angle),
    };
    x.apply_block_update(b, &v).expect("feasible rotation");
}

impl SmoothObjective for Hspp {
    fn dim(&self) -> usize {
        self.sig.n()
    }

    fn value(&self, x: &Mat) -> f64 {
        let m = self.phi.nrows();
        let q = &self.phi * x;
        let u = self.inner_products(&q);
        let mut total = 0.0;
        for i in 0..m {
            for j in 0..m {
                total += (self.targets[(i, j)] - distance_from_inner(u[(i, j)], self.alpha)).powi(2);
            }
        }
        total / (m * m) as f64
    }

    fn gradient(&self, x: &Mat) -> Mat {
        let m = self.phi.nrows();
        let q = &self.phi * x;
        let u = self.inner_products(&q);
        let w = self.weights(&u, 0..m, 2.0 / (m * m) as f64);
        self.gradient_from_weights(&w, &q)
    }

    fn curvature(&self) -> Curvature {
        Curvature::LipschitzBound(self.lipschitz)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

impl FiniteSumObjective for Hspp {
    fn n_terms(&self) -> usize {
        self.phi.nrows()
    }

    fn value_term(&self, i: usize, x: &Mat) -> f64 {
        let m = self.phi.nrows();
        let q = &self.phi * x;
        let qi = q.row(i);
        let qij = self.sig.scale_cols(&q);
        let mut total = 0.0;
        for j in 0..m {
            let u = qi.dot(&qij.row(j)) / (self.alpha * self.alpha);
            total += (self.targets[(i, j)] - distance_from_inner(u, self.alpha)).powi(2);
        }
        total / m as f64
    }

    fn gradient_term(&self, i: usize, x: &Mat) -> Mat {
        self.minibatch_gradient(&[i], x)
    }

    fn minibatch_gradient(&self, batch: &[usize], x: &Mat) -> Mat {
        let (m, n) = (self.phi.nrows(), self.sig.n());
        if batch.is_empty() {
            return Mat::zeros(n, n);
        }
        let q = &self.phi * x;
        let u = self.inner_products(&q);
        let mut counts = DVector::<f64>::zeros(m);
        for &i in batch {
            counts[i] += 1.0;
        }
        let mut w = self.weights(&u, (0..m).filter(|&i| counts[i] > 0.0), 2.0 / (m as f64 * batch.len() as f64));
        for i in 0..m {
            if counts[i] > 1.0 {
                w.row_mut(i).scale_mut(counts[i]);
            }
        }
        self.gradient_from_weights(&w, &q)
    }
}
