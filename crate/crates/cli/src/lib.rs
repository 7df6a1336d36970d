//! Benchmark harness around the `jobcd` solvers: matrix readers, run
//! specifications, solver dispatch and CSV output.

pub mod error;
pub mod format;
pub mod io;
pub mod runner;
pub mod spec;

pub use error::{CliError, Result};
pub use io::{load_matrix, MatrixFormat};
pub use runner::{compare, run, CompareRow};
pub use spec::{Args, Problem, RunSpec, Solver};
