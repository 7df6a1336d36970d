//! Records shared by the solvers and the CLI.

/// One sampled point of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub elapsed_s: f64,
    pub objective: f64,
    /// `Σ_ij |XᵀJX − J|_ij`
    pub residual: f64,
    /// `‖V̄ − I‖²_F` of the last block step (summed over blocks for Jacobi).
    pub step_norm_sq: f64,
    /// `‖G̃ − ∇f(X)‖_F` for estimator-driven runs, when measured.
    pub estimator_dev: Option<f64>,
}

/// Per-step details passed to observers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub iter: usize,
    pub f_before: f64,
    pub f_after: f64,
    pub step_norm_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIters,
    Tolerance,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x: crate::Mat,
    pub final_objective: f64,
    pub final_residual: f64,
    pub iters: usize,
    pub elapsed_s: f64,
    pub stop: StopReason,
    pub trace: Vec<IterationRecord>,
}
