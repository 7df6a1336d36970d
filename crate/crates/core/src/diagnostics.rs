//! First-order optimality and block-stationarity measurements.

use rand::Rng;

use crate::jorth::{sample_block, JOrthMatrix};
use crate::objectives::SmoothObjective;
use crate::subproblem::{build_subproblem, solve, QMode};
use crate::{Mat, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityReport {
    /// `‖∇_J f(X)‖_F`
    pub riemannian_norm: f64,
    /// `‖M − Mᵀ‖_F` with `M = X∇f(X)ᵀJ`
    pub symmetry_defect: f64,
    /// `E(X)`, exact or sampled
    pub bs_estimate: f64,
    pub samples: usize,
}

/// `∇f(X) − J X ∇f(X)ᵀ X J`, vanishing exactly at critical points.
pub fn riemannian_gradient<O: SmoothObjective + ?Sized>(obj: &O, x: &JOrthMatrix) -> Mat {
    riemannian_from_gradient(&obj.gradient(x.matrix()), x)
}

pub fn riemannian_from_gradient(g: &Mat, x: &JOrthMatrix) -> Mat {
    let sig = x.signature();
    let xm = x.matrix();
    let inner = g.transpose() * xm;
    g - sig.scale_cols(&sig.scale_rows(&(xm * inner)))
}

pub fn symmetry_defect<O: SmoothObjective + ?Sized>(obj: &O, x: &JOrthMatrix) -> f64 {
    symmetry_defect_from_gradient(&obj.gradient(x.matrix()), x)
}

pub fn symmetry_defect_from_gradient(g: &Mat, x: &JOrthMatrix) -> f64 {
    let m = x.signature().scale_cols(&(x.matrix() * g.transpose()));
    (&m - m.transpose()).norm()
}

/// Mean of `‖V̄_B − I₂‖²_F` over blocks `B`. All `C(n,2)` blocks are
/// enumerated when that is at most `n_samples`; otherwise `n_samples`
/// blocks are drawn uniformly with replacement.
///
/// Returns the estimate and the number of blocks it averages.
pub fn bs_estimate<O: SmoothObjective + ?Sized, R: Rng + ?Sized>(
    obj: &O,
    x: &JOrthMatrix,
    mode: QMode<'_>,
    theta: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<(f64, usize)> {
    let g = obj.gradient(x.matrix());
    bs_estimate_from_gradient(&g, x, mode, theta, n_samples, rng)
}

pub fn bs_estimate_from_gradient<R: Rng + ?Sized>(
    g: &Mat,
    x: &JOrthMatrix,
    mode: QMode<'_>,
    theta: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<(f64, usize)> {
    let sig = x.signature();
    let n = sig.n();
    let total = n * (n - 1) / 2;
    let blocks = if total <= n_samples {
        sig.all_pairs()
    } else {
        (0..n_samples).map(|_| sample_block(sig, rng)).collect::<Result<Vec<_>>>()?
    };
    if blocks.is_empty() {
        return Ok((0.0, 0));
    }
    let mut sum = 0.0;
    for &b in &blocks {
        let sp = build_subproblem(x, g, b, mode, theta)?;
        sum += solve(&sp).dist_sq();
    }
    Ok((sum / blocks.len() as f64, blocks.len()))
}

pub fn stationarity_report<O: SmoothObjective + ?Sized, R: Rng + ?Sized>(
    obj: &O,
    x: &JOrthMatrix,
    mode: QMode<'_>,
    theta: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<StationarityReport> {
    let g = obj.gradient(x.matrix());
    let (bs, samples) = bs_estimate_from_gradient(&g, x, mode, theta, n_samples, rng)?;
    Ok(StationarityReport {
        riemannian_norm: riemannian_from_gradient(&g, x).norm(),
        symmetry_defect: symmetry_defect_from_gradient(&g, x),
        bs_estimate: bs,
        samples,
    })
}
