//! Matrix readers and CSV writers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use jobcd::trace::{IterationRecord, SolveReport};
use jobcd::Mat;

use crate::error::{CliError, Result};
use crate::format::sig10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    MatrixMarket,
}

impl MatrixFormat {
    /// `.mtx` and `.mm` are MatrixMarket, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
            Some(e) if e == "mtx" || e == "mm" => MatrixFormat::MatrixMarket,
            _ => MatrixFormat::Csv,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Some(MatrixFormat::Csv),
            "matrixmarket" | "mtx" | "mm" => Some(MatrixFormat::MatrixMarket),
            _ => None,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<Mat> {
    let text = read(path)?;
    match format {
        MatrixFormat::Csv => parse_csv(&text, path),
        MatrixFormat::MatrixMarket => parse_matrix_market(&text, path),
    }
}

fn parse_err(path: &Path, line: u64, column: Option<usize>, msg: impl Into<String>) -> CliError {
    CliError::Parse { path: path.to_owned(), line, column, msg: msg.into() }
}

/// One row per line; blank lines are skipped.
pub fn parse_csv(text: &str, path: &Path) -> Result<Mat> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, None, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let mut row = Vec::with_capacity(rec.len());
        for (k, cell) in rec.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(path, line, Some(k + 1), format!("not a number: {cell:?}")))?;
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_err(path, line, None, format!("expected {} values, found {}", first.len(), row.len())));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, None, "no data rows"));
    }
    let (m, n) = (rows.len(), rows[0].len());
    Ok(Mat::from_fn(m, n, |i, j| rows[i][j]))
}

#[derive(Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

/// Real or integer MatrixMarket, coordinate or array, general/symmetric/skew-symmetric.
pub fn parse_matrix_market(text: &str, path: &Path) -> Result<Mat> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i as u64 + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(path, 1, None, "empty file"))?;
    let h: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if h.len() != 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" {
        return Err(parse_err(path, 1, None, "missing %%MatrixMarket matrix header"));
    }
    let coordinate = match h[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(parse_err(path, 1, None, format!("unsupported layout {other}"))),
    };
    if h[3] != "real" && h[3] != "integer" && h[3] != "double" {
        return Err(parse_err(path, 1, None, format!("unsupported field {}", h[3])));
    }
    let sym = match h[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(parse_err(path, 1, None, format!("unsupported symmetry {other}"))),
    };
    let mut body = lines.filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('%'));
    let (size_line, size) = body.next().ok_or_else(|| parse_err(path, 2, None, "missing size line"))?;
    let dims = parse_fields::<usize>(size, path, size_line)?;
    let expected = if coordinate { 3 } else { 2 };
    if dims.len() != expected {
        return Err(parse_err(path, size_line, None, format!("size line needs {expected} integers")));
    }
    let (m, n) = (dims[0], dims[1]);
    if sym != Symmetry::General && m != n {
        return Err(parse_err(path, size_line, None, "symmetric storage requires a square matrix"));
    }
    let mut out = Mat::zeros(m, n);
    let mut put = |i: usize, j: usize, v: f64| {
        out[(i, j)] = v;
        match sym {
            Symmetry::General => {}
            Symmetry::Symmetric => out[(j, i)] = v,
            Symmetry::Skew => out[(j, i)] = -v,
        }
    };
    if coordinate {
        let nnz = dims[2];
        let mut seen = 0;
        for (line, l) in body {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 {
                return Err(parse_err(path, line, None, format!("expected 'row col value', found {} fields", f.len())));
            }
            let idx = |k: usize, bound: usize| -> Result<usize> {
                let v: usize = f[k].parse().map_err(|_| parse_err(path, line, Some(k + 1), format!("bad index {:?}", f[k])))?;
                if v == 0 || v > bound {
                    return Err(parse_err(path, line, Some(k + 1), format!("index {v} outside 1..={bound}")));
                }
                Ok(v - 1)
            };
            let (i, j) = (idx(0, m)?, idx(1, n)?);
            let v: f64 = f[2].parse().map_err(|_| parse_err(path, line, Some(3), format!("not a number: {:?}", f[2])))?;
            put(i, j, v);
            seen += 1;
        }
        if seen != nnz {
            return Err(CliError::Dimension(format!("{}: header declares {nnz} entries, found {seen}", path.display())));
        }
    } else {
        // Column-major; symmetric variants store the lower triangle only.
        let slots: Vec<(usize, usize)> = (0..n)
            .flat_map(|j| {
                let start = match sym {
                    Symmetry::General => 0,
                    Symmetry::Symmetric => j,
                    Symmetry::Skew => j + 1,
                };
                (start..m).map(move |i| (i, j))
            })
            .collect();
        let mut k = 0;
        for (line, l) in body {
            for (col, tok) in l.split_whitespace().enumerate() {
                let v: f64 = tok.parse().map_err(|_| parse_err(path, line, Some(col + 1), format!("not a number: {tok:?}")))?;
                let &(i, j) = slots
                    .get(k)
                    .ok_or_else(|| parse_err(path, line, Some(col + 1), format!("more than {} values", slots.len())))?;
                put(i, j, v);
                k += 1;
            }
        }
        if k != slots.len() {
            return Err(CliError::Dimension(format!("{}: expected {} values, found {k}", path.display(), slots.len())));
        }
    }
    Ok(out)
}

fn parse_fields<T: std::str::FromStr>(l: &str, path: &Path, line: u64) -> Result<Vec<T>> {
    l.split_whitespace()
        .enumerate()
        .map(|(k, t)| t.parse().map_err(|_| parse_err(path, line, Some(k + 1), format!("bad integer {t:?}"))))
        .collect()
}

pub const TRACE_HEADER: [&str; 5] = ["iter", "elapsed_s", "objective", "residual", "step_norm_sq"];
pub const SUMMARY_HEADER: [&str; 4] = ["final_objective", "final_residual", "iters", "elapsed_s"];

/// Trace rows; `timing = false` writes `elapsed_s` as zero so reruns are byte-identical.
pub fn write_trace<W: Write>(out: W, trace: &[IterationRecord], timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in trace {
        let t = if timing { r.elapsed_s } else { 0.0 };
        w.write_record([r.iter.to_string(), sig10(t), sig10(r.objective), sig10(r.residual), sig10(r.step_norm_sq)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_summary<W: Write>(out: W, rep: &SolveReport, timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    w.write_record(summary_fields(rep, timing))?;
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn summary_fields(rep: &SolveReport, timing: bool) -> [String; 4] {
    let t = if timing { rep.elapsed_s } else { 0.0 };
    [sig10(rep.final_objective), sig10(rep.final_residual), rep.iters.to_string(), sig10(t)]
}

pub fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|source| CliError::Io { path: PathBuf::from(path), source })
}
