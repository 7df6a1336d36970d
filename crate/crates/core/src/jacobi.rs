//! Jacobi block descent over a random perfect matching of the rows, with an
//! optional variance-reduced (PAGE-style) gradient estimator.
//!
//! With `Q = ςI₄` the `n/2` block subproblems of one iteration only read the
//! snapshot `(X, G̃)` and write disjoint row pairs, so they are solved on a
//! thread pool and applied afterwards. Results do not depend on the number of
//! threads: all randomness is drawn on the calling thread in a fixed order.

use std::time::Instant;

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::gs::{check_budget, check_start};
use crate::jorth::{sample_grouping, BlockGrouping, JOrthMatrix};
use crate::objectives::{block_gradient, FiniteSumObjective, SmoothObjective};
use crate::subproblem::{solve, SubproblemData, SubproblemSolution};
use crate::trace::{IterationRecord, SolveReport, StepRecord, StopReason};
use crate::{Error, Mat, Result};

/// Estimator deviation is only measured when `N` is at most this.
pub const DEVIATION_MAX_TERMS: usize = 2_000;

#[derive(Debug, Clone)]
pub struct JacobiConfig {
    /// `None` picks `1e−3·(1+ς)`.
    pub theta: Option<f64>,
    /// `None` uses the objective's Lipschitz estimate.
    pub varsigma: Option<f64>,
    pub max_iters: Option<usize>,
    pub time_limit: Option<f64>,
    pub seed: u64,
    pub trace_every: usize,
    pub vr_enabled: bool,
    /// Worker threads for the block subproblems; `None` uses all cores.
    pub threads: Option<usize>,
    /// Overrides for the estimator's `b`, `b′` and `p`.
    pub large_batch: Option<usize>,
    pub small_batch: Option<usize>,
    pub switch_prob: Option<f64>,
    /// Evaluate `f` after every step for the step observer.
    pub step_objective: bool,
}

impl Default for JacobiConfig {
    fn default() -> Self {
        Self {
            theta: None,
            varsigma: None,
            max_iters: Some(1_000),
            time_limit: None,
            seed: 0,
            trace_every: 10,
            vr_enabled: true,
            threads: None,
            large_batch: None,
            small_batch: None,
            switch_prob: None,
            step_objective: false,
        }
    }
}

/// State of the estimator
/// `G̃ᵗ = (1/b)Σ_{S₊}∇f_i(Xᵗ)` with probability `p`, otherwise
/// `G̃ᵗ⁻¹ + (1/b′)Σ_{S*}(∇f_i(Xᵗ) − ∇f_i(Xᵗ⁻¹))`.
#[derive(Debug, Clone)]
pub struct VRGradState {
    pub g_tilde: Mat,
    pub x_prev: Mat,
    pub b: usize,
    pub b_prime: usize,
    pub p: f64,
    /// Number of `∇f_i` evaluations so far.
    pub oracle_calls: usize,
}

impl VRGradState {
    /// Defaults `b = N`, `b′ = max(1, round(√N))`, `p = b′/(b+b′)`.
    pub fn default_sizes(n_terms: usize) -> (usize, usize, f64) {
        let b = n_terms;
        let b_prime = ((n_terms as f64).sqrt().round() as usize).max(1);
        (b, b_prime, b_prime as f64 / (b + b_prime) as f64)
    }

    /// Initializes `G̃⁰` from a size-`b` batch at `x0`.
    pub fn new<O, R>(obj: &O, x0: &Mat, b: usize, b_prime: usize, p: f64, rng: &mut R) -> Result<Self>
    where
        O: FiniteSumObjective + ?Sized,
        R: Rng + ?Sized,
    {
        if b == 0 || b_prime == 0 {
            return Err(Error::Parameter("batch sizes must be positive".into()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Parameter(format!("switch probability must lie in [0, 1], got {p}")));
        }
        if obj.n_terms() == 0 {
            return Err(Error::Parameter("finite sum has no terms".into()));
        }
        let mut state = Self { g_tilde: Mat::zeros(0, 0), x_prev: x0.clone(), b, b_prime, p, oracle_calls: 0 };
        state.g_tilde = state.large_batch(obj, x0, rng);
        Ok(state)
    }

    /// A batch of size `≥ N` is the full index set, so it gives `∇f` exactly.
    fn large_batch<O: FiniteSumObjective + ?Sized, R: Rng + ?Sized>(&mut self, obj: &O, x: &Mat, rng: &mut R) -> Mat {
        let n_terms = obj.n_terms();
        if self.b >= n_terms {
            self.oracle_calls += n_terms;
            return obj.gradient(x);
        }
        let batch: Vec<usize> = (0..self.b).map(|_| rng.random_range(0..n_terms)).collect();
        self.oracle_calls += batch.len();
        obj.minibatch_gradient(&batch, x)
    }

    /// Advances the estimator to `x` and returns `G̃ᵗ`.
    pub fn update<O: FiniteSumObjective + ?Sized, R: Rng + ?Sized>(&mut self, obj: &O, x: &Mat, rng: &mut R) -> &Mat {
        let refresh = self.p >= 1.0 || (self.p > 0.0 && rng.random::<f64>() < self.p);
        if refresh {
            self.g_tilde = self.large_batch(obj, x, rng);
        } else {
            let n_terms = obj.n_terms();
            let batch: Vec<usize> = (0..self.b_prime).map(|_| rng.random_range(0..n_terms)).collect();
            self.oracle_calls += 2 * batch.len();
            let correction = obj.minibatch_gradient(&batch, x) - obj.minibatch_gradient(&batch, &self.x_prev);
            self.g_tilde += correction;
        }
        self.x_prev.copy_from(x);
        &self.g_tilde
    }
}

/// One estimator step; see [`VRGradState::update`].
pub fn vr_gradient_update<O, R>(state: &mut VRGradState, obj: &O, x: &JOrthMatrix, rng: &mut R) -> Mat
where
    O: FiniteSumObjective + ?Sized,
    R: Rng + ?Sized,
{
    state.update(obj, x.matrix(), rng).clone()
}

/// Solves the block subproblems of `grouping` at the snapshot `(x, g)` with
/// `Q = ςI₄`, then applies all updates. Returns the per-block solutions in
/// grouping order.
pub fn jacobi_step(
    x: &mut JOrthMatrix,
    g: &Mat,
    grouping: &BlockGrouping,
    varsigma: f64,
    theta: f64,
    pool: Option<&rayon::ThreadPool>,
) -> Result<Vec<SubproblemSolution>> {
    let n = x.n();
    if g.nrows() != n || g.ncols() != n {
        return Err(Error::Dimension(format!("gradient is {}x{}, expected {n}x{n}", g.nrows(), g.ncols())));
    }
    if !(varsigma >= 0.0) || !varsigma.is_finite() {
        return Err(Error::Parameter(format!("varsigma must be nonnegative, got {varsigma}")));
    }
    let q = nalgebra::Matrix4::identity() * varsigma;
    let data = grouping
        .pairs()
        .iter()
        .map(|&b| SubproblemData::from_parts(block_gradient(g, x.matrix(), b), q, b.kind, theta))
        .collect::<Result<Vec<_>>>()?;
    let run = || data.par_iter().map(solve).collect::<Vec<_>>();
    let sols = match pool {
        Some(p) => p.install(run),
        None => data.iter().map(solve).collect(),
    };
    for (&b, sol) in grouping.pairs().iter().zip(&sols) {
        x.apply_block_update(b, &sol.v)?;
    }
    Ok(sols)
}

fn build_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::Parameter("threads must be positive".into()));
        }
        builder = builder.num_threads(t);
    }
    builder.build().map_err(|e| Error::Parameter(format!("thread pool: {e}")))
}

fn resolve_scalar<O: SmoothObjective + ?Sized>(obj: &O, cfg: &JacobiConfig) -> Result<(f64, f64)> {
    let varsigma = cfg.varsigma.unwrap_or_else(|| obj.lipschitz());
    if !(varsigma >= 0.0) || !varsigma.is_finite() {
        return Err(Error::Parameter(format!("varsigma must be nonnegative, got {varsigma}")));
    }
    let theta = cfg.theta.unwrap_or(1e-3 * (1.0 + varsigma));
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::Parameter(format!("theta must be positive, got {theta}")));
    }
    Ok((varsigma, theta))
}

/// Where the gradient of each iteration comes from.
trait GradientSource {
    fn next(&mut self, x: &JOrthMatrix) -> Mat;
    /// `‖G̃ − ∇f‖_F` for the last gradient, when affordable.
    fn deviation(&self, x_prev_grad: &Mat) -> Option<f64>;
    fn estimates(&self) -> bool;
}

struct Exact<'a, O: SmoothObjective + ?Sized>(&'a O);

impl<O: SmoothObjective + ?Sized> GradientSource for Exact<'_, O> {
    fn next(&mut self, x: &JOrthMatrix) -> Mat {
        self.0.gradient(x.matrix())
    }
    fn deviation(&self, _: &Mat) -> Option<f64> {
        Some(0.0)
    }
    fn estimates(&self) -> bool {
        false
    }
}

struct Estimated<'a, O: FiniteSumObjective + ?Sized> {
    obj: &'a O,
    state: Option<VRGradState>,
    sizes: (usize, usize, f64),
    rng: ChaCha8Rng,
}

impl<O: FiniteSumObjective + ?Sized> GradientSource for Estimated<'_, O> {
    fn next(&mut self, x: &JOrthMatrix) -> Mat {
        match &mut self.state {
            Some(s) => s.update(self.obj, x.matrix(), &mut self.rng).clone(),
            None => {
                let (b, bp, p) = self.sizes;
                let s = VRGradState::new(self.obj, x.matrix(), b, bp, p, &mut self.rng).expect("sizes validated");
                let g = s.g_tilde.clone();
                self.state = Some(s);
                g
            }
        }
    }
    fn deviation(&self, exact: &Mat) -> Option<f64> {
        self.state.as_ref().map(|s| (&s.g_tilde - exact).norm())
    }
    fn estimates(&self) -> bool {
        true
    }
}

/// Jacobi iterations with exact gradients.
pub fn jacobi_solve<O: SmoothObjective + ?Sized>(obj: &O, x0: JOrthMatrix, cfg: &JacobiConfig) -> Result<SolveReport> {
    jacobi_solve_with(obj, x0, cfg, |_, _| {})
}

pub fn jacobi_solve_with<O, F>(obj: &O, x0: JOrthMatrix, cfg: &JacobiConfig, on_step: F) -> Result<SolveReport>
where
    O: SmoothObjective + ?Sized,
    F: FnMut(&StepRecord, &JOrthMatrix),
{
    run(obj, x0, cfg, &mut Exact(obj), false, on_step)
}

/// Jacobi iterations driven by the variance-reduced estimator. With
/// `vr_enabled = false` or a single term this is [`jacobi_solve`].
pub fn vrj_solve<O: FiniteSumObjective + ?Sized>(obj: &O, x0: JOrthMatrix, cfg: &JacobiConfig) -> Result<SolveReport> {
    vrj_solve_with(obj, x0, cfg, |_, _| {})
}

pub fn vrj_solve_with<O, F>(obj: &O, x0: JOrthMatrix, cfg: &JacobiConfig, on_step: F) -> Result<SolveReport>
where
    O: FiniteSumObjective + ?Sized,
    F: FnMut(&StepRecord, &JOrthMatrix),
{
    let n_terms = obj.n_terms();
    if !cfg.vr_enabled || n_terms <= 1 {
        return run(obj, x0, cfg, &mut Exact(obj), false, on_step);
    }
    let (db, dbp, _) = VRGradState::default_sizes(n_terms);
    let b = cfg.large_batch.unwrap_or(db);
    let bp = cfg.small_batch.unwrap_or(dbp);
    let p = cfg.switch_prob.unwrap_or(bp as f64 / (b + bp) as f64);
    if b == 0 || bp == 0 {
        return Err(Error::Parameter("batch sizes must be positive".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("switch probability must lie in [0, 1], got {p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut src = Estimated { obj, state: None, sizes: (b, bp, p), rng };
    run(obj, x0, cfg, &mut src, n_terms <= DEVIATION_MAX_TERMS, on_step)
}

fn run<O, S, F>(obj: &O, x0: JOrthMatrix, cfg: &JacobiConfig, src: &mut S, measure_dev: bool, mut on_step: F) -> Result<SolveReport>
where
    O: SmoothObjective + ?Sized,
    S: GradientSource,
    F: FnMut(&StepRecord, &JOrthMatrix),
{
    let n = x0.n();
    if n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    if obj.dim() != n {
        return Err(Error::Dimension(format!("objective dimension {} vs X of size {n}", obj.dim())));
    }
    check_budget(cfg.max_iters, cfg.time_limit)?;
    check_start(&x0)?;
    let (varsigma, theta) = resolve_scalar(obj, cfg)?;
    let pool = build_pool(cfg.threads)?;
    let trace_every = cfg.trace_every.max(1);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = x0;
    let start = Instant::now();
    let mut trace = vec![IterationRecord {
        iter: 0,
        elapsed_s: 0.0,
        objective: obj.value(x.matrix()),
        residual: x.residual(),
        step_norm_sq: 0.0,
        estimator_dev: None,
    }];
    let mut f_cur = if cfg.step_objective { trace[0].objective } else { f64::NAN };
    let mut iter = 0;
    let mut last_dist = 0.0;
    let mut last_dev = None;

    let stop = loop {
        if cfg.max_iters.is_some_and(|m| iter >= m) {
            break StopReason::MaxIters;
        }
        if cfg.time_limit.is_some_and(|t| start.elapsed().as_secs_f64() >= t) {
            break StopReason::TimeLimit;
        }
        let grouping = sample_grouping(x.signature(), &mut rng)?;
        let traced = (iter + 1) % trace_every == 0;
        let g = src.next(&x);
        if traced && src.estimates() && measure_dev {
            last_dev = src.deviation(&obj.gradient(x.matrix()));
        } else if !src.estimates() {
            last_dev = Some(0.0);
        }
        let sols = jacobi_step(&mut x, &g, &grouping, varsigma, theta, Some(&pool))?;
        iter += 1;
        last_dist = sols.iter().map(SubproblemSolution::dist_sq).sum();
        let f_before = f_cur;
        if cfg.step_objective {
            f_cur = obj.value(x.matrix());
        }
        if traced {
            trace.push(IterationRecord {
                iter,
                elapsed_s: start.elapsed().as_secs_f64(),
                objective: if cfg.step_objective { f_cur } else { obj.value(x.matrix()) },
                residual: x.residual(),
                step_norm_sq: last_dist,
                estimator_dev: last_dev,
            });
        }
        on_step(&StepRecord { iter, f_before, f_after: f_cur, step_norm_sq: last_dist }, &x);
    };

    let elapsed_s = start.elapsed().as_secs_f64();
    let final_objective = obj.value(x.matrix());
    let final_residual = x.residual();
    if trace.last().is_some_and(|r| r.iter != iter) {
        trace.push(IterationRecord {
            iter,
            elapsed_s,
            objective: final_objective,
            residual: final_residual,
            step_norm_sq: last_dist,
            estimator_dev: last_dev,
        });
    }
    Ok(SolveReport { x: x.into_matrix(), final_objective, final_residual, iters: iter, elapsed_s, stop, trace })
}

/// `Σ_i ‖U_{B_i}(V_i − I)U_{B_i}ᵀ X‖²_F`, one term per block.
pub fn block_step_norms(x: &Mat, grouping: &BlockGrouping, vs: &[Matrix2<f64>]) -> Vec<f64> {
    grouping
        .pairs()
        .iter()
        .zip(vs)
        .map(|(b, v)| {
            let w = v - Matrix2::identity();
            (0..x.ncols())
                .map(|c| {
                    let (xi, xj) = (x[(b.i, c)], x[(b.j, c)]);
                    (w[(0, 0)] * xi + w[(0, 1)] * xj).powi(2) + (w[(1, 0)] * xi + w[(1, 1)] * xj).powi(2)
                })
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jorth::{cs_random_init, Signature};
    use crate::objectives::testing::{gaussian, random_symmetric};
    use crate::objectives::{hevp_objective, quadratic_objective, Curvature};

    /// `f_i(X) = ½ tr(XᵀC_iX)`; the mean over `i` is a quadratic objective.
    struct QuadSum {
        cs: Vec<Mat>,
        mean: Mat,
    }

    impl QuadSum {
        fn new(n: usize, count: usize, rng: &mut ChaCha8Rng) -> Self {
            let cs: Vec<Mat> = (0..count).map(|_| random_symmetric(n, rng)).collect();
            let mean = cs.iter().fold(Mat::zeros(n, n), |a, c| a + c) / count as f64;
            Self { cs, mean }
        }
    }

    impl SmoothObjective for QuadSum {
        fn dim(&self) -> usize {
            self.mean.nrows()
        }
        fn value(&self, x: &Mat) -> f64 {
            0.5 * x.dot(&(&self.mean * x))
        }
        fn gradient(&self, x: &Mat) -> Mat {
            &self.mean * x
        }
        fn curvature(&self) -> Curvature {
            Curvature::LipschitzBound(self.lipschitz())
        }
        fn lipschitz(&self) -> f64 {
            self.mean.clone().symmetric_eigen().eigenvalues.amax()
        }
    }

    impl FiniteSumObjective for QuadSum {
        fn n_terms(&self) -> usize {
            self.cs.len()
        }
        fn value_term(&self, i: usize, x: &Mat) -> f64 {
            0.5 * x.dot(&(&self.cs[i] * x))
        }
        fn gradient_term(&self, i: usize, x: &Mat) -> Mat {
            &self.cs[i] * x
        }
    }

    #[test]
    fn default_sizes() {
        assert_eq!(VRGradState::default_sizes(50), (50, 7, 7.0 / 57.0));
        assert_eq!(VRGradState::default_sizes(1), (1, 1, 0.5));
        assert_eq!(VRGradState::default_sizes(2).1, 1);
    }

    #[test]
    fn estimator_full_batch_and_zero_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let obj = QuadSum::new(4, 10, &mut rng);
        let sig = Signature::new(4, 2).unwrap();
        let x = cs_random_init(&sig, 1, 0.5).unwrap();
        let mut s = VRGradState::new(&obj, x.matrix(), 10, 3, 1.0, &mut rng).unwrap();
        let g = vr_gradient_update(&mut s, &obj, &x, &mut rng);
        assert!((&g - obj.gradient(x.matrix())).amax() <= 1e-12);

        let mut s = VRGradState::new(&obj, x.matrix(), 4, 3, 0.0, &mut rng).unwrap();
        let before = s.g_tilde.clone();
        let after = vr_gradient_update(&mut s, &obj, &x, &mut rng);
        assert_eq!(before, after);
        assert!(VRGradState::new(&obj, x.matrix(), 4, 3, 1.5, &mut rng).is_err());
    }

    /// Along a fixed path, the error `e_t = G̃_t − ∇f(X_t)` with a full-batch
    /// refresh obeys `E‖e_t‖² = (1−p)(E‖e_{t−1}‖² + σ_t²/b′)`, where
    /// `σ_t² = (1/N)Σ_i‖Δ_i − Δ̄‖²` and `Δ_i = ∇f_i(X_t) − ∇f_i(X_{t−1})`.
    #[test]
    fn estimator_error_follows_recursion() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 4;
        let n_terms = 50;
        let obj = QuadSum::new(n, n_terms, &mut rng);
        let sig = Signature::new(n, 2).unwrap();
        let (b, bp, p) = VRGradState::default_sizes(n_terms);
        let path: Vec<Mat> = {
            let mut x = cs_random_init(&sig, 3, 0.5).unwrap();
            let mut path = vec![x.matrix().clone()];
            for k in 0..200 {
                let blk = sig.pair(k % n, (k + 1) % n).unwrap();
                let v = match blk.kind {
                    crate::jorth::BlockKind::Hyperbolic => crate::jorth::hyperbolic_rotation(0.02),
                    crate::jorth::BlockKind::Orthogonal => crate::jorth::givens_rotation(0.05),
                };
                x.apply_block_update(blk, &v).unwrap();
                path.push(x.matrix().clone());
            }
            path
        };
        let mut predicted = vec![0.0; path.len()];
        for t in 1..path.len() {
            let deltas: Vec<Mat> =
                (0..n_terms).map(|i| obj.gradient_term(i, &path[t]) - obj.gradient_term(i, &path[t - 1])).collect();
            let mean = deltas.iter().fold(Mat::zeros(n, n), |a, d| a + d) / n_terms as f64;
            let sigma2 = deltas.iter().map(|d| (d - &mean).norm_squared()).sum::<f64>() / n_terms as f64;
            predicted[t] = (1.0 - p) * (predicted[t - 1] + sigma2 / bp as f64);
        }
        let chains = 2000;
        let mut mse = vec![0.0; path.len()];
        for c in 0..chains {
            let mut crng = ChaCha8Rng::seed_from_u64(100 + c);
            let mut s = VRGradState::new(&obj, &path[0], b, bp, p, &mut crng).unwrap();
            for (t, xt) in path.iter().enumerate().skip(1) {
                let g = s.update(&obj, xt, &mut crng).clone();
                mse[t] += (&g - obj.gradient(xt)).norm_squared() / chains as f64;
            }
        }
        let (m, q): (f64, f64) = (mse.iter().sum(), predicted.iter().sum());
        assert!((m - q).abs() <= 0.05 * q, "measured {m} vs recursion {q}");
    }

    #[test]
    fn zero_gradient_keeps_identity_blocks() {
        let sig = Signature::new(6, 3).unwrap();
        let mut x = cs_random_init(&sig, 5, 1.0).unwrap();
        let before = x.matrix().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let grouping = sample_grouping(&sig, &mut rng).unwrap();
        let sols = jacobi_step(&mut x, &Mat::zeros(6, 6), &grouping, 1.0, 0.1, None).unwrap();
        assert!(sols.iter().all(|s| s.v == Matrix2::identity()));
        assert_eq!(&before, x.matrix());
    }

    #[test]
    fn parallel_equals_sequential_and_lemma_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let obj = hevp_objective(gaussian(20, 10, &mut rng));
        let sig = Signature::new(10, 5).unwrap();
        let x0 = cs_random_init(&sig, 4, 0.5).unwrap();
        let pool = build_pool(Some(3)).unwrap();
        let (vs, th) = (obj.lipschitz(), 1e-3 * (1.0 + obj.lipschitz()));
        let mut xs = x0.clone();
        let mut xp = x0.clone();
        for _ in 0..30 {
            let grouping = sample_grouping(&sig, &mut rng).unwrap();
            let g = obj.gradient(xs.matrix());
            let before = xs.matrix().clone();
            let a = jacobi_step(&mut xs, &g, &grouping, vs, th, None).unwrap();
            let b = jacobi_step(&mut xp, &g, &grouping, vs, th, Some(&pool)).unwrap();
            assert_eq!(a, b);
            assert_eq!(xs.matrix(), xp.matrix());
            let delta = xs.matrix() - &before;
            let v: Vec<_> = a.iter().map(|s| s.v).collect();
            let parts = block_step_norms(&before, &grouping, &v);
            let total: f64 = parts.iter().sum();
            assert!((total - delta.norm_squared()).abs() <= 1e-10 * (1.0 + total));
            let dist: f64 = a.iter().map(SubproblemSolution::dist_sq).sum();
            assert!(delta.norm_squared() <= before.norm_squared() * dist * (1.0 + 1e-12) + 1e-300);
        }
    }

    #[test]
    fn exact_jacobi_descends_with_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 8;
        let a = gaussian(n, n, &mut rng);
        let obj = quadratic_objective(&a * a.transpose(), Mat::identity(n, n)).unwrap();
        let sig = Signature::new(n, 4).unwrap();
        let x0 = cs_random_init(&sig, 6, 0.5).unwrap();
        let (vs, theta) = (obj.lipschitz(), 1e-3 * (1.0 + obj.lipschitz()));
        let cfg = JacobiConfig { max_iters: Some(300), vr_enabled: false, step_objective: true, threads: Some(1), ..Default::default() };
        let mut checked = 0;
        jacobi_solve_with(&obj, x0, &cfg, |s, x| {
            let slack = 1e-9 * (1.0 + s.f_before.abs());
            assert!(s.f_after <= s.f_before - 0.5 * theta * s.step_norm_sq + slack, "{s:?}");
            assert!(x.residual() < 1e-8);
            checked += 1;
        })
        .unwrap();
        assert_eq!(checked, 300);
        assert!(vs > 0.0);
    }

    #[test]
    fn degenerate_estimators_match_exact_trajectory() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 6;
        let obj = QuadSum::new(n, 12, &mut rng);
        let sig = Signature::new(n, 3).unwrap();
        let x0 = cs_random_init(&sig, 7, 0.5).unwrap();
        let base = JacobiConfig { max_iters: Some(50), seed: 9, trace_every: 1, threads: Some(1), ..Default::default() };
        let exact = vrj_solve(&obj, x0.clone(), &JacobiConfig { vr_enabled: false, ..base.clone() }).unwrap();
        let forced = vrj_solve(&obj, x0.clone(), &JacobiConfig { switch_prob: Some(1.0), ..base.clone() }).unwrap();
        assert_eq!(exact.x, forced.x);
        let plain = jacobi_solve(&obj, x0, &base).unwrap();
        assert_eq!(exact.x, plain.x);
    }

    #[test]
    fn hevp_finite_sum_run() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let obj = hevp_objective(gaussian(200, 10, &mut rng));
        let sig = Signature::new(10, 5).unwrap();
        let x0 = cs_random_init(&sig, 8, 1.0).unwrap();
        let f0 = obj.value(x0.matrix());
        let cfg = JacobiConfig { max_iters: Some(500), seed: 8, threads: Some(2), ..Default::default() };
        let rep = vrj_solve(&obj, x0, &cfg).unwrap();
        assert!(rep.final_objective < f0);
        // X grows without bound here; the residual stays at rounding level.
        assert!(rep.final_residual <= 1e-12 * rep.x.norm_squared().max(1.0), "residual {}", rep.final_residual);
        assert!(rep.trace.iter().skip(1).all(|r| r.estimator_dev.is_some()));
    }

    #[test]
    fn odd_dimension_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let obj = hevp_objective(gaussian(10, 5, &mut rng));
        let sig = Signature::new(5, 2).unwrap();
        let err = vrj_solve(&obj, JOrthMatrix::identity(sig), &JacobiConfig::default()).unwrap_err();
        assert!(matches!(err, Error::OddDimension(5)));
        assert!(err.to_string().contains("n must be even"));
    }
}
