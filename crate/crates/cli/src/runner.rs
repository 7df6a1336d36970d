//! Problem construction, solver dispatch and comparison tables.

use std::io::Write;

use jobcd::baselines::{admm_solve, umcm_solve, BaselineConfig};
use jobcd::gs::{gs_solve, CurvatureChoice, GsConfig};
use jobcd::jacobi::{jacobi_solve, vrj_solve, JacobiConfig};
use jobcd::jorth::cs_random_init;
use jobcd::objectives::{
    euclidean_distance_matrix, hevp_objective, hspp_objective, quadratic_objective, FiniteSumObjective, Hevp, Hspp,
    Quadratic, SmoothObjective,
};
use jobcd::trace::SolveReport;
use jobcd::{Mat, Signature};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CliError, Result};
use crate::format::{cell, sig10};
use crate::io::{create, load_matrix, write_summary, write_trace, MatrixFormat};
use crate::spec::{Problem, RunSpec, Solver};

const DEFAULT_N: usize = 10;
const DEFAULT_M: usize = 20;

pub enum Built {
    Hevp(Hevp),
    Hspp(Hspp),
    Quadratic(Quadratic),
}

/// A constructed problem with its resolved signature.
pub struct Instance {
    pub objective: Built,
    pub signature: Signature,
    pub m: usize,
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat {
    let mut out = Mat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            out[(i, j)] = StandardNormal.sample(rng);
        }
    }
    out
}

fn load(spec: &RunSpec, path: &std::path::Path) -> Result<Mat> {
    let fmt = spec.data_format.unwrap_or_else(|| MatrixFormat::from_path(path));
    load_matrix(path, fmt)
}

fn check_dim(name: &str, given: Option<usize>, actual: usize) -> Result<usize> {
    match given {
        Some(g) if g != actual => Err(CliError::Dimension(format!("--{name} {g} does not match input ({actual})"))),
        _ => Ok(actual),
    }
}

/// Loads or generates the problem data. Generated data uses `seed` so every
/// solver sharing a spec sees the same instance; generated quadratics use
/// PSD factors `AAᵀ/n` so the objective is bounded below.
pub fn build_problem(spec: &RunSpec) -> Result<Instance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (objective, n, m) = match spec.problem {
        Problem::Hevp | Problem::Hspp => {
            let data = match &spec.data {
                Some(path) => {
                    let d = load(spec, path)?;
                    check_dim("n", spec.n, d.ncols())?;
                    check_dim("m", spec.m, d.nrows())?;
                    d
                }
                None => gaussian(spec.m.unwrap_or(DEFAULT_M), spec.n.unwrap_or(DEFAULT_N), &mut rng),
            };
            let (m, n) = (data.nrows(), data.ncols());
            if spec.problem == Problem::Hevp {
                (Built::Hevp(hevp_objective(data)), n, m)
            } else {
                let targets = match &spec.targets {
                    Some(path) => load(spec, path)?,
                    None => euclidean_distance_matrix(&data),
                };
                let sig = signature(spec, n)?;
                (Built::Hspp(hspp_objective(&data, targets, spec.alpha, sig)?), n, m)
            }
        }
        Problem::Quadratic => {
            let (c, d) = match (&spec.c_matrix, &spec.d_matrix) {
                (Some(c), Some(d)) => (load(spec, c)?, load(spec, d)?),
                (None, None) => {
                    let n = spec.n.unwrap_or(DEFAULT_N);
                    let a = gaussian(n, n, &mut rng);
                    let b = gaussian(n, n, &mut rng);
                    (&a * a.transpose() / n as f64, &b * b.transpose() / n as f64)
                }
                _ => return Err(CliError::Spec("quadratic needs both --c-matrix and --d-matrix".into())),
            };
            let n = check_dim("n", spec.n, c.nrows())?;
            (Built::Quadratic(quadratic_objective(c, d)?), n, spec.m.unwrap_or(1))
        }
    };
    Ok(Instance { objective, signature: signature(spec, n)?, m })
}

fn signature(spec: &RunSpec, n: usize) -> Result<Signature> {
    let p = spec.p.unwrap_or(n / 2);
    if p > n {
        return Err(CliError::Spec(format!("p = {p} exceeds n = {n}")));
    }
    Ok(Signature::new(n, p)?)
}

fn gs_config(spec: &RunSpec) -> GsConfig {
    let d = GsConfig::default();
    GsConfig {
        theta: spec.theta,
        q_mode: spec.varsigma.map_or(CurvatureChoice::Auto, |s| CurvatureChoice::Scalar(Some(s))),
        max_iters: spec.max_iters.or(d.max_iters),
        time_limit: spec.time_limit,
        seed: spec.seed,
        trace_every: spec.trace_every.unwrap_or(d.trace_every),
        tol: None,
    }
}

fn jacobi_config(spec: &RunSpec) -> JacobiConfig {
    let d = JacobiConfig::default();
    JacobiConfig {
        theta: spec.theta,
        varsigma: spec.varsigma,
        max_iters: spec.max_iters.or(d.max_iters),
        time_limit: spec.time_limit,
        seed: spec.seed,
        trace_every: spec.trace_every.unwrap_or(d.trace_every),
        threads: spec.threads,
        ..d
    }
}

fn baseline_config(spec: &RunSpec) -> BaselineConfig {
    let d = BaselineConfig::default();
    BaselineConfig {
        penalty: spec.penalty,
        step: spec.step,
        dual_step: spec.dual_step,
        max_iters: spec.max_iters.or(d.max_iters),
        time_limit: spec.time_limit,
        seed: spec.seed,
        trace_every: spec.trace_every.unwrap_or(d.trace_every),
    }
}

fn dispatch<O: SmoothObjective>(obj: &O, finite: Option<&dyn FiniteSumDyn>, spec: &RunSpec, sig: &Signature) -> Result<SolveReport> {
    let x0 = cs_random_init(sig, spec.seed, spec.init_scale)?;
    let rep = match spec.solver {
        Solver::Gs => gs_solve(obj, x0, &gs_config(spec))?,
        Solver::J => jacobi_solve(obj, x0, &jacobi_config(spec))?,
        Solver::Vrj => match finite {
            Some(f) => f.vrj(x0, &jacobi_config(spec))?,
            None => return Err(CliError::Spec("vrj needs a finite-sum problem (hevp or hspp)".into())),
        },
        Solver::Umcm => umcm_solve(obj, &x0, &baseline_config(spec))?,
        Solver::Admm => admm_solve(obj, &x0, &baseline_config(spec))?,
    };
    Ok(rep)
}

/// Object-safe handle on `vrj_solve` for the finite-sum problems.
trait FiniteSumDyn {
    fn vrj(&self, x0: jobcd::JOrthMatrix, cfg: &JacobiConfig) -> jobcd::Result<SolveReport>;
}

impl<T: FiniteSumObjective> FiniteSumDyn for T {
    fn vrj(&self, x0: jobcd::JOrthMatrix, cfg: &JacobiConfig) -> jobcd::Result<SolveReport> {
        vrj_solve(self, x0, cfg)
    }
}

pub fn solve(spec: &RunSpec, inst: &Instance) -> Result<SolveReport> {
    match &inst.objective {
        Built::Hevp(o) => dispatch(o, Some(o), spec, &inst.signature),
        Built::Hspp(o) => dispatch(o, Some(o), spec, &inst.signature),
        Built::Quadratic(o) => dispatch(o, None, spec, &inst.signature),
    }
}

/// Builds, solves and writes the trace and summary files named in `spec`.
pub fn run(spec: &RunSpec) -> Result<SolveReport> {
    let inst = build_problem(spec)?;
    let rep = solve(spec, &inst)?;
    if let Some(path) = &spec.trace {
        write_trace(create(path)?, &rep.trace, spec.timing)?;
    }
    if let Some(path) = &spec.summary {
        write_summary(create(path)?, &rep, spec.timing)?;
    }
    Ok(rep)
}

#[derive(Debug, Clone)]
pub struct CompareRow {
    pub solver: Solver,
    pub outcome: std::result::Result<SolveReport, String>,
}

pub const TABLE_HEADER: [&str; 7] =
    ["problem", "solver", "objective(residual)", "final_objective", "final_residual", "iters", "elapsed_s"];

/// Runs every spec on its own instance; all specs must describe the same
/// problem size. Solver failures become error rows.
pub fn compare(specs: &[RunSpec]) -> Result<Vec<CompareRow>> {
    let mut built = Vec::with_capacity(specs.len());
    for s in specs {
        built.push(build_problem(s).map_err(|e| e.to_string()));
    }
    let mut dims = None;
    for (s, b) in specs.iter().zip(&built) {
        if let Ok(inst) = b {
            let d = (s.problem, inst.signature.n(), inst.signature.p(), inst.m);
            match dims {
                None => dims = Some(d),
                Some(prev) if prev != d => {
                    return Err(CliError::Dimension(format!(
                        "specs disagree on the problem: {}(n={}, p={}, m={}) vs {}(n={}, p={}, m={})",
                        prev.0.name(),
                        prev.1,
                        prev.2,
                        prev.3,
                        d.0.name(),
                        d.1,
                        d.2,
                        d.3
                    )))
                }
                _ => {}
            }
        }
    }
    Ok(specs
        .iter()
        .zip(built)
        .map(|(s, b)| CompareRow { solver: s.solver, outcome: b.and_then(|inst| solve(s, &inst).map_err(|e| e.to_string())) })
        .collect())
}

pub fn write_table<W: Write>(out: W, problem: Problem, rows: &[CompareRow], timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_HEADER)?;
    for r in rows {
        let fields = match &r.outcome {
            Ok(rep) => [
                cell(rep.final_objective, rep.final_residual),
                sig10(rep.final_objective),
                sig10(rep.final_residual),
                rep.iters.to_string(),
                sig10(if timing { rep.elapsed_s } else { 0.0 }),
            ],
            Err(e) => [format!("error: {e}"), String::new(), String::new(), String::new(), String::new()],
        };
        let mut rec = vec![problem.name().to_string(), r.solver.name().to_string()];
        rec.extend(fields);
        w.write_record(rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
