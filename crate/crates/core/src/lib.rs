//! Block coordinate descent for smooth minimization under J-orthogonality
//! constraints `XᵀJX = J`, with `J = diag(±1)`.
//!
//! The crate is organized around the pieces a solver run needs:
//!
//! - [`jorth`]: signatures, J-orthogonal iterates, block index sampling and
//!   feasible random initialization through a hyperbolic CS construction.
//! - [`quartic`] and [`subproblem`]: exact global minimization of the 2×2
//!   block majorizer, for hyperbolic and orthogonal blocks.
//! - [`objectives`]: the smooth objective abstraction plus the quadratic
//!   trace, hyperbolic eigenvalue and hyperbolic structural probe problems.
//! - [`gs`]: the Gauss–Seidel solver (one random block per iteration).
//! - [`jacobi`]: the Jacobi solver over random perfect matchings, with the
//!   PAGE-style variance-reduced gradient estimator.
//! - [`diagnostics`]: first-order and block-stationarity measurements.
//! - [`baselines`]: simple infeasible-path reference solvers for benchmarks.

pub mod baselines;
pub mod diagnostics;
pub mod error;
pub mod gs;
pub mod jacobi;
pub mod jorth;
pub mod objectives;
pub mod quartic;
pub mod subproblem;
pub mod trace;

pub use error::{Error, Result};
pub use jorth::{BlockGrouping, BlockKind, BlockPair, JOrthMatrix, Signature};

/// Dense real matrix used for iterates and gradients.
pub type Mat = nalgebra::DMatrix<f64>;
