//! Run specifications, command-line flags and `--config` files.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::error::{CliError, Result};
use crate::io::MatrixFormat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Problem {
    Hevp,
    Hspp,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Gs,
    J,
    Vrj,
    Umcm,
    Admm,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Gs => "gs",
            Solver::J => "j",
            Solver::Vrj => "vrj",
            Solver::Umcm => "umcm",
            Solver::Admm => "admm",
        }
    }
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Hevp => "hevp",
            Problem::Hspp => "hspp",
            Problem::Quadratic => "quadratic",
        }
    }
}

/// Everything one solver run needs. Dimensions left as `None` come from the
/// input files when given, otherwise `n = 10`, `m = 20`, `p = n/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub problem: Problem,
    pub solver: Solver,
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub m: Option<usize>,
    pub seed: u64,
    pub theta: Option<f64>,
    /// `None` means auto.
    pub varsigma: Option<f64>,
    pub time_limit: Option<f64>,
    pub max_iters: Option<usize>,
    pub trace_every: Option<usize>,
    pub threads: Option<usize>,
    pub alpha: f64,
    pub init_scale: f64,
    pub penalty: f64,
    pub step: Option<f64>,
    pub dual_step: f64,
    pub data: Option<PathBuf>,
    pub targets: Option<PathBuf>,
    pub c_matrix: Option<PathBuf>,
    pub d_matrix: Option<PathBuf>,
    pub data_format: Option<MatrixFormat>,
    pub trace: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    /// Write real elapsed times; off gives byte-identical reruns.
    pub timing: bool,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            problem: Problem::Hevp,
            solver: Solver::Gs,
            n: None,
            p: None,
            m: None,
            seed: 0,
            theta: None,
            varsigma: None,
            time_limit: None,
            max_iters: None,
            trace_every: None,
            threads: None,
            alpha: 1.0,
            init_scale: 1.0,
            penalty: 10.0,
            step: None,
            dual_step: 1e-2,
            data: None,
            targets: None,
            c_matrix: None,
            d_matrix: None,
            data_format: None,
            trace: None,
            summary: None,
            timing: true,
        }
    }
}

impl RunSpec {
    pub fn validate(&self) -> Result<()> {
        if let (Some(n), Some(p)) = (self.n, self.p) {
            if p > n {
                return Err(CliError::Spec(format!("p = {p} exceeds n = {n}")));
            }
        }
        if self.n.is_some_and(|n| n < 2) {
            return Err(CliError::Spec("n must be at least 2".into()));
        }
        if self.m == Some(0) {
            return Err(CliError::Spec("m must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(CliError::Spec("threads must be at least 1".into()));
        }
        Ok(())
    }
}

/// `--varsigma` value: a number, or `auto` for the objective's own bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarsigmaArg(pub Option<f64>);

fn parse_varsigma(s: &str) -> std::result::Result<VarsigmaArg, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(VarsigmaArg(None));
    }
    s.parse::<f64>().map(|v| VarsigmaArg(Some(v))).map_err(|e| format!("expected a number or 'auto': {e}"))
}

fn parse_format(s: &str) -> std::result::Result<MatrixFormat, String> {
    MatrixFormat::parse(s).ok_or_else(|| format!("unknown format {s:?} (csv or matrixmarket)"))
}

/// Benchmark harness for J-orthogonality constrained solvers.
///
/// Runs one solver (or, with `--compare`, several on a shared initialization)
/// and writes CSV traces and summaries.
#[derive(Debug, Parser)]
#[command(name = "jobcd", version, args_override_self = true)]
pub struct Args {
    /// File of `key=value` lines using the long flag names; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "hevp")]
    pub problem: Problem,
    #[arg(long, value_enum, default_value = "gs")]
    pub solver: Solver,
    /// Comma-separated solvers to run against each other instead of `--solver`.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub compare: Vec<Solver>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Scalar curvature `ς`, or `auto`.
    #[arg(long, value_parser = parse_varsigma)]
    pub varsigma: Option<VarsigmaArg>,
    /// Seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub trace_every: Option<usize>,
    /// Worker threads for the Jacobi solvers; defaults to all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Spread of the random hyperbolic angles used for the initial point.
    #[arg(long, default_value_t = 1.0)]
    pub init_scale: f64,
    #[arg(long, default_value_t = 10.0)]
    pub penalty: f64,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = 1e-2)]
    pub dual_step: f64,
    /// Data matrix for hevp/hspp (rows are samples).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Target metric matrix for hspp; defaults to the data's Euclidean distances.
    #[arg(long)]
    pub targets: Option<PathBuf>,
    #[arg(long)]
    pub c_matrix: Option<PathBuf>,
    #[arg(long)]
    pub d_matrix: Option<PathBuf>,
    /// csv or matrixmarket; inferred from the extension otherwise.
    #[arg(long, value_parser = parse_format)]
    pub data_format: Option<MatrixFormat>,
    /// Trace CSV path.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Summary CSV path.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Comparison table path (stdout otherwise).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub timing: bool,
}

impl Args {
    /// Parses `argv`, splicing the `--config` file in front of the explicit flags.
    pub fn from_argv<I, T>(argv: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
        let expanded = expand_config(&argv)?;
        Ok(Args::try_parse_from(expanded)?)
    }

    pub fn spec(&self) -> RunSpec {
        RunSpec {
            problem: self.problem,
            solver: self.solver,
            n: self.n,
            p: self.p,
            m: self.m,
            seed: self.seed,
            theta: self.theta,
            varsigma: self.varsigma.and_then(|v| v.0),
            time_limit: self.time_limit,
            max_iters: self.max_iters,
            trace_every: self.trace_every,
            threads: self.threads,
            alpha: self.alpha,
            init_scale: self.init_scale,
            penalty: self.penalty,
            step: self.step,
            dual_step: self.dual_step,
            data: self.data.clone(),
            targets: self.targets.clone(),
            c_matrix: self.c_matrix.clone(),
            d_matrix: self.d_matrix.clone(),
            data_format: self.data_format,
            trace: self.trace.clone(),
            summary: self.summary.clone(),
            timing: self.timing,
        }
    }
}

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    let mut found = None;
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            found = it.next().map(PathBuf::from);
        } else if let Some(v) = s.strip_prefix("--config=") {
            found = Some(PathBuf::from(v));
        }
    }
    found
}

/// Reads `key=value` lines (`#` starts a comment) into `--key=value` flags.
pub fn parse_config(text: &str) -> Result<Vec<String>> {
    let mut flags = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Spec(format!("config line {}: expected key=value", k + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key == "config" {
            return Err(CliError::Spec(format!("config line {}: nested config files are not supported", k + 1)));
        }
        flags.push(format!("--{key}={}", value.trim()));
    }
    Ok(flags)
}

fn expand_config(argv: &[OsString]) -> Result<Vec<OsString>> {
    let Some(path) = config_path(argv) else {
        return Ok(argv.to_vec());
    };
    let text = fs::read_to_string(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
    let mut out: Vec<OsString> = argv.iter().take(1).cloned().collect();
    out.extend(parse_config(&text)?.into_iter().map(OsString::from));
    out.extend(argv.iter().skip(1).cloned());
    Ok(out)
}
