use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid signature: {0}")]
    Signature(String),
    #[error("n must be even (got {0})")]
    OddDimension(usize),
    #[error("block update is not J-orthogonal for its block (defect {defect:.3e})")]
    InfeasibleUpdate { defect: f64 },
    #[error("starting point is not feasible (residual {residual:.3e})")]
    InfeasibleStart { residual: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("polynomial is identically zero")]
    ZeroPolynomial,
    #[error("degenerate data row {row}: {reason}")]
    DegenerateRow { row: usize, reason: String },
    #[error("block kind mismatch: expected {expected}, got {got}")]
    BlockKind { expected: &'static str, got: &'static str },
}
