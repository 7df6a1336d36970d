use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: line {line}{}: {msg}", path.display(), column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse { path: PathBuf, line: u64, column: Option<usize>, msg: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Args(#[from] clap::Error),
    #[error("{0}")]
    Spec(String),
    #[error("{0}")]
    Dimension(String),
    #[error(transparent)]
    Solver(#[from] jobcd::Error),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
