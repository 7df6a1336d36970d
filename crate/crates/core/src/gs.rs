//! Gauss–Seidel block coordinate descent: one random 2×2 block per iteration.

use std::collections::VecDeque;
use std::time::Instant;

use nalgebra::Matrix2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::jorth::{sample_block, BlockPair, JOrthMatrix};
use crate::objectives::{block_gradient, BlockTracker, Curvature, KroneckerH, SmoothObjective};
use crate::subproblem::{build_subproblem, solve, QMode, SubproblemData};
use crate::trace::{IterationRecord, SolveReport, StepRecord, StopReason};
use crate::{Error, Mat, Result};

/// Largest starting residual accepted by the solvers.
pub const START_RESIDUAL_TOL: f64 = 1e-6;

/// How the block curvature `Q` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum CurvatureChoice {
    /// Exact Kronecker bound when the objective provides one, scalar otherwise.
    #[default]
    Auto,
    /// Exact Kronecker bound; an error for objectives without one.
    Exact,
    /// `Q = ςI`; `None` uses the objective's Lipschitz estimate.
    Scalar(Option<f64>),
}

#[derive(Debug, Clone)]
pub struct GsConfig {
    /// `None` picks `1e−3·(1+ς)` in scalar mode and `1e−3` in exact mode.
    pub theta: Option<f64>,
    pub q_mode: CurvatureChoice,
    pub max_iters: Option<usize>,
    pub time_limit: Option<f64>,
    pub seed: u64,
    pub trace_every: usize,
    /// Stop once the mean of `‖V̄−I₂‖²_F` over the last `C(n,2)` steps is below this.
    pub tol: Option<f64>,
}

impl Default for GsConfig {
    fn default() -> Self {
        Self {
            theta: None,
            q_mode: CurvatureChoice::Auto,
            max_iters: Some(10_000),
            time_limit: None,
            seed: 0,
            trace_every: 100,
            tol: None,
        }
    }
}

/// Resolved curvature and proximal weight for a run.
#[derive(Debug, Clone)]
pub enum ResolvedQ {
    Exact(KroneckerH),
    Scalar(f64),
}

impl ResolvedQ {
    pub fn mode(&self) -> QMode<'_> {
        match self {
            ResolvedQ::Exact(h) => QMode::Exact(h),
            ResolvedQ::Scalar(s) => QMode::Scalar(*s),
        }
    }
}

pub fn resolve_curvature<O: SmoothObjective + ?Sized>(
    obj: &O,
    choice: CurvatureChoice,
    theta: Option<f64>,
) -> Result<(ResolvedQ, f64)> {
    let q = match (choice, obj.curvature()) {
        (CurvatureChoice::Auto | CurvatureChoice::Exact, Curvature::Kronecker(h)) => ResolvedQ::Exact(h),
        (CurvatureChoice::Exact, Curvature::LipschitzBound(_)) => {
            return Err(Error::Parameter("exact curvature is not available for this objective".into()))
        }
        (CurvatureChoice::Auto, Curvature::LipschitzBound(l)) => ResolvedQ::Scalar(l),
        (CurvatureChoice::Scalar(s), _) => ResolvedQ::Scalar(s.unwrap_or_else(|| obj.lipschitz())),
    };
    if let ResolvedQ::Scalar(s) = q {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::Parameter(format!("varsigma must be nonnegative, got {s}")));
        }
    }
    let theta = match (theta, &q) {
        (Some(t), _) => t,
        (None, ResolvedQ::Scalar(s)) => 1e-3 * (1.0 + s),
        (None, ResolvedQ::Exact(_)) => 1e-3,
    };
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::Parameter(format!("theta must be positive, got {theta}")));
    }
    Ok((q, theta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GsStep {
    pub v: Matrix2<f64>,
    pub f_before: f64,
    pub f_after: f64,
    /// Majorizer value `G(V̄)`, an upper bound on `f_after`.
    pub model: f64,
    pub step_norm_sq: f64,
}

/// Majorizer value `G(V) = f(X) + sp(V) − sp(I₂)`.
fn model_value(f: f64, sp: &SubproblemData, v: &Matrix2<f64>) -> f64 {
    f + sp.objective(v) - sp.objective(&Matrix2::identity())
}

/// One block step with a full gradient evaluation.
pub fn gs_step<O: SmoothObjective + ?Sized>(
    obj: &O,
    x: &mut JOrthMatrix,
    b: BlockPair,
    mode: QMode<'_>,
    theta: f64,
) -> Result<GsStep> {
    let f_before = obj.value(x.matrix());
    let grad = obj.gradient(x.matrix());
    let sp = build_subproblem(x, &grad, b, mode, theta)?;
    let sol = solve(&sp);
    let model = model_value(f_before, &sp, &sol.v);
    x.apply_block_update(b, &sol.v)?;
    Ok(GsStep { v: sol.v, f_before, f_after: obj.value(x.matrix()), model, step_norm_sq: sol.dist_sq() })
}

/// Value and block gradients, incremental when the objective supports it.
enum Evaluator<'a, O: SmoothObjective + ?Sized> {
    Tracked(Box<dyn BlockTracker + 'a>),
    Full { obj: &'a O, value: f64 },
}

impl<'a, O: SmoothObjective + ?Sized> Evaluator<'a, O> {
    fn new(obj: &'a O, x: &Mat) -> Self {
        match obj.tracker(x) {
            Some(t) => Evaluator::Tracked(t),
            None => Evaluator::Full { obj, value: obj.value(x) },
        }
    }

    fn value(&self) -> f64 {
        match self {
            Evaluator::Tracked(t) => t.value(),
            Evaluator::Full { value, .. } => *value,
        }
    }

    fn block_gradient(&self, x: &Mat, b: BlockPair) -> Matrix2<f64> {
        match self {
            Evaluator::Tracked(t) => t.block_gradient(x, b),
            Evaluator::Full { obj, .. } => block_gradient(&obj.gradient(x), x, b),
        }
    }

    /// Called before `x_old` is updated.
    fn before_update(&mut self, x_old: &Mat, b: BlockPair, v: &Matrix2<f64>) {
        if let Evaluator::Tracked(t) = self {
            t.apply(x_old, b, v);
        }
    }

    fn after_update(&mut self, x_new: &Mat) {
        if let Evaluator::Full { obj, value } = self {
            *value = obj.value(x_new);
        }
    }

    fn refresh(&mut self, x: &Mat) {
        match self {
            Evaluator::Tracked(t) => t.refresh(x),
            Evaluator::Full { obj, value } => *value = obj.value(x),
        }
    }
}

pub(crate) fn check_start(x0: &JOrthMatrix) -> Result<()> {
    let r = x0.residual();
    if !(r <= START_RESIDUAL_TOL) {
        return Err(Error::InfeasibleStart { residual: r });
    }
    Ok(())
}

pub(crate) fn check_budget(max_iters: Option<usize>, time_limit: Option<f64>) -> Result<()> {
    if max_iters.is_none() && time_limit.is_none_or(|t| !t.is_finite()) {
        return Err(Error::Parameter("either max_iters or a finite time_limit is required".into()));
    }
    Ok(())
}

/// Runs the solver; see [`gs_solve_with`] for per-step observation.
pub fn gs_solve<O: SmoothObjective + ?Sized>(obj: &O, x0: JOrthMatrix, cfg: &GsConfig) -> Result<SolveReport> {
    gs_solve_with(obj, x0, cfg, |_, _| {})
}

/// Runs the solver, calling `on_step` after every block update.
pub fn gs_solve_with<O, F>(obj: &O, x0: JOrthMatrix, cfg: &GsConfig, mut on_step: F) -> Result<SolveReport>
where
    O: SmoothObjective + ?Sized,
    F: FnMut(&StepRecord, &JOrthMatrix),
{
    let n = x0.n();
    if obj.dim() != n {
        return Err(Error::Dimension(format!("objective dimension {} vs X of size {n}", obj.dim())));
    }
    if n < 2 {
        return Err(Error::Dimension("block updates need n ≥ 2".into()));
    }
    check_budget(cfg.max_iters, cfg.time_limit)?;
    check_start(&x0)?;
    let (q, theta) = resolve_curvature(obj, cfg.q_mode, cfg.theta)?;
    let mode = q.mode();
    let trace_every = cfg.trace_every.max(1);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = x0;
    let start = Instant::now();
    let mut eval = Evaluator::new(obj, x.matrix());
    let mut trace = vec![IterationRecord {
        iter: 0,
        elapsed_s: 0.0,
        objective: eval.value(),
        residual: x.residual(),
        step_norm_sq: 0.0,
        estimator_dev: None,
    }];
    let window = n * (n - 1) / 2;
    let mut recent: VecDeque<f64> = VecDeque::with_capacity(window);
    let mut recent_sum = 0.0;
    let mut iter = 0;
    let mut last_dist = 0.0;

    let stop = loop {
        if cfg.max_iters.is_some_and(|m| iter >= m) {
            break StopReason::MaxIters;
        }
        if cfg.time_limit.is_some_and(|t| start.elapsed().as_secs_f64() >= t) {
            break StopReason::TimeLimit;
        }
        let b = sample_block(x.signature(), &mut rng)?;
        let gxt = eval.block_gradient(x.matrix(), b);
        let qmat = crate::subproblem::choose_q(x.matrix(), b, mode)?;
        let sp = SubproblemData::from_parts(gxt, qmat, b.kind, theta)?;
        let sol = solve(&sp);
        let f_before = eval.value();
        eval.before_update(x.matrix(), b, &sol.v);
        x.apply_block_update(b, &sol.v)?;
        eval.after_update(x.matrix());
        iter += 1;
        last_dist = sol.dist_sq();

        if iter % trace_every == 0 {
            eval.refresh(x.matrix());
            trace.push(IterationRecord {
                iter,
                elapsed_s: start.elapsed().as_secs_f64(),
                objective: eval.value(),
                residual: x.residual(),
                step_norm_sq: last_dist,
                estimator_dev: None,
            });
        }
        on_step(&StepRecord { iter, f_before, f_after: eval.value(), step_norm_sq: last_dist }, &x);

        if let Some(tol) = cfg.tol {
            if recent.len() == window {
                recent_sum -= recent.pop_front().unwrap_or(0.0);
            }
            recent.push_back(last_dist);
            recent_sum += last_dist;
            if recent.len() == window && recent_sum / window as f64 <= tol {
                break StopReason::Tolerance;
            }
        }
    };

    eval.refresh(x.matrix());
    let elapsed_s = start.elapsed().as_secs_f64();
    let final_objective = eval.value();
    let final_residual = x.residual();
    if trace.last().is_some_and(|r| r.iter != iter) {
        trace.push(IterationRecord {
            iter,
            elapsed_s,
            objective: final_objective,
            residual: final_residual,
            step_norm_sq: last_dist,
            estimator_dev: None,
        });
    }
    Ok(SolveReport { x: x.into_matrix(), final_objective, final_residual, iters: iter, elapsed_s, stop, trace })
}
