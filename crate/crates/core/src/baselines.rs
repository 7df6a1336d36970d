//! Simple infeasible-path reference solvers used for comparisons.
//!
//! Neither is a reconstruction of a published method. `umcm` follows the
//! multiplier-corrected gradient `∇f − JX∇fᵀXJ` plus a penalty on
//! `XᵀJX − J`; `admm` splits `Y = JX` with the bilinear constraint
//! `XᵀY = J`, with a linearized `X` step, an exact `Y` solve and dual ascent
//! on `Λ`.

use std::time::Instant;

use crate::gs::{check_budget, check_start};
use crate::jorth::{JOrthMatrix, Signature};
use crate::objectives::SmoothObjective;
use crate::trace::{IterationRecord, SolveReport, StopReason};
use crate::{Error, Mat, Result};

/// Step-size halvings allowed within one iteration before giving up on it.
const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone)]
pub struct BaselineConfig {
    /// Penalty `λ`.
    pub penalty: f64,
    /// Primal step `η`; `None` uses `1e−3/L̂`.
    pub step: Option<f64>,
    /// Dual step `ρ` (ADMM only).
    pub dual_step: f64,
    pub max_iters: Option<usize>,
    pub time_limit: Option<f64>,
    pub seed: u64,
    pub trace_every: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            penalty: 10.0,
            step: None,
            dual_step: 1e-2,
            max_iters: Some(1_000),
            time_limit: None,
            seed: 0,
            trace_every: 1,
        }
    }
}

impl BaselineConfig {
    fn validate<O: SmoothObjective + ?Sized>(&self, obj: &O) -> Result<f64> {
        let step = self.step.unwrap_or_else(|| 1e-3 / obj.lipschitz().max(f64::MIN_POSITIVE));
        for (name, v) in [("penalty", self.penalty), ("step", step), ("dual_step", self.dual_step)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        check_budget(self.max_iters, self.time_limit)?;
        Ok(step)
    }
}

/// `XᵀJX − J`
fn constraint_gap(x: &Mat, sig: &Signature) -> Mat {
    x.transpose() * sig.scale_rows(x) - sig.matrix()
}

fn residual(x: &Mat, sig: &Signature) -> f64 {
    constraint_gap(x, sig).iter().map(|e| e.abs()).sum()
}

/// Whether the trial objective counts as a blow-up: non-finite, or more than
/// ten times the scale of the starting objective.
fn blew_up(f_start: f64, f_new: f64) -> bool {
    !f_new.is_finite() || f_new.abs() > 10.0 * f_start.abs().max(1.0)
}

/// Iteration state with a trial step at step size `η`.
trait Method {
    fn x(&self) -> &Mat;
    fn trial(&self, obj: &dyn Fn(&Mat) -> Mat, eta: f64) -> Self
    where
        Self: Sized;
}

struct Umcm<'a> {
    x: Mat,
    sig: &'a Signature,
    penalty: f64,
}

impl Method for Umcm<'_> {
    fn x(&self) -> &Mat {
        &self.x
    }

    fn trial(&self, grad: &dyn Fn(&Mat) -> Mat, eta: f64) -> Self {
        let x = &self.x;
        let g = grad(x);
        let sig = self.sig;
        // ∇f − JX∇fᵀXJ + λ·JX(XᵀJX − J)
        let corrected = &g - sig.scale_cols(&sig.scale_rows(&(x * (g.transpose() * x))));
        let pen = sig.scale_rows(&(x * constraint_gap(x, sig))) * self.penalty;
        Umcm { x: x - (corrected + pen) * eta, sig, penalty: self.penalty }
    }
}

struct Admm<'a> {
    x: Mat,
    y: Mat,
    lambda: Mat,
    sig: &'a Signature,
    penalty: f64,
    dual_step: f64,
}

impl Method for Admm<'_> {
    fn x(&self) -> &Mat {
        &self.x
    }

    fn trial(&self, grad: &dyn Fn(&Mat) -> Mat, eta: f64) -> Self {
        let (x, y, lam, sig, mu) = (&self.x, &self.y, &self.lambda, self.sig, self.penalty);
        let n = x.nrows();
        let j = sig.matrix();
        // X step on f + ⟨Λ, XᵀY − J⟩ + (λ/2)‖XᵀY − J‖² + (λ/2)‖Y − JX‖²
        let gap = x.transpose() * y - &j;
        let gx = grad(x) + y * lam.transpose() + y * gap.transpose() * mu + (x - sig.scale_rows(y)) * mu;
        let x_new = x - gx * eta;
        // Y step: (XXᵀ + I)Y = JX + XJ − XΛ/λ
        let lhs = &x_new * x_new.transpose() + Mat::identity(n, n);
        let rhs = sig.scale_rows(&x_new) + sig.scale_cols(&x_new) - &x_new * lam / mu;
        let y_new = match lhs.cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => y.clone(),
        };
        let lam_new = lam + (x_new.transpose() * &y_new - j) * self.dual_step;
        Admm { x: x_new, y: y_new, lambda: lam_new, sig, penalty: mu, dual_step: self.dual_step }
    }
}

fn run<O: SmoothObjective + ?Sized, M: Method>(
    obj: &O,
    sig: &Signature,
    mut state: M,
    mut eta: f64,
    cfg: &BaselineConfig,
) -> Result<SolveReport> {
    let start = Instant::now();
    let grad = |x: &Mat| obj.gradient(x);
    let trace_every = cfg.trace_every.max(1);
    let mut f = obj.value(state.x());
    let f_start = f;
    let mut trace = vec![IterationRecord {
        iter: 0,
        elapsed_s: 0.0,
        objective: f,
        residual: residual(state.x(), sig),
        step_norm_sq: 0.0,
        estimator_dev: None,
    }];
    let mut iter = 0;
    let mut last_step = 0.0;
    let stop = loop {
        if cfg.max_iters.is_some_and(|m| iter >= m) {
            break StopReason::MaxIters;
        }
        if cfg.time_limit.is_some_and(|t| start.elapsed().as_secs_f64() >= t) {
            break StopReason::TimeLimit;
        }
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand = state.trial(&grad, eta);
            let f_new = obj.value(cand.x());
            if !blew_up(f_start, f_new) && cand.x().iter().all(|v| v.is_finite()) {
                accepted = Some((cand, f_new));
                break;
            }
            eta *= 0.5;
        }
        iter += 1;
        if let Some((cand, f_new)) = accepted {
            last_step = (cand.x() - state.x()).norm_squared();
            state = cand;
            f = f_new;
        } else {
            last_step = 0.0;
        }
        if iter % trace_every == 0 {
            trace.push(IterationRecord {
                iter,
                elapsed_s: start.elapsed().as_secs_f64(),
                objective: f,
                residual: residual(state.x(), sig),
                step_norm_sq: last_step,
                estimator_dev: None,
            });
        }
    };
    let final_residual = residual(state.x(), sig);
    let elapsed_s = start.elapsed().as_secs_f64();
    if trace.last().is_some_and(|r| r.iter != iter) {
        trace.push(IterationRecord {
            iter,
            elapsed_s,
            objective: f,
            residual: final_residual,
            step_norm_sq: last_step,
            estimator_dev: None,
        });
    }
    Ok(SolveReport { x: state.x().clone(), final_objective: f, final_residual, iters: iter, elapsed_s, stop, trace })
}

fn check_dims<O: SmoothObjective + ?Sized>(obj: &O, x0: &JOrthMatrix) -> Result<()> {
    if obj.dim() != x0.n() {
        return Err(Error::Dimension(format!("objective dimension {} vs X of size {}", obj.dim(), x0.n())));
    }
    check_start(x0)
}

pub fn umcm_solve<O: SmoothObjective + ?Sized>(obj: &O, x0: &JOrthMatrix, cfg: &BaselineConfig) -> Result<SolveReport> {
    check_dims(obj, x0)?;
    let eta = cfg.validate(obj)?;
    let sig = x0.signature();
    run(obj, sig, Umcm { x: x0.matrix().clone(), sig, penalty: cfg.penalty }, eta, cfg)
}

pub fn admm_solve<O: SmoothObjective + ?Sized>(obj: &O, x0: &JOrthMatrix, cfg: &BaselineConfig) -> Result<SolveReport> {
    check_dims(obj, x0)?;
    let eta = cfg.validate(obj)?;
    let sig = x0.signature();
    let n = x0.n();
    let state = Admm {
        x: x0.matrix().clone(),
        y: sig.scale_rows(x0.matrix()),
        lambda: Mat::zeros(n, n),
        sig,
        penalty: cfg.penalty,
        dual_step: cfg.dual_step,
    };
    run(obj, sig, state, eta, cfg)
}
