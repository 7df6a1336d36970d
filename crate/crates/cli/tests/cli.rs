use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use jobcd_cli::runner::{write_table, TABLE_HEADER};
use jobcd_cli::{compare, load_matrix, run, Args, MatrixFormat, Problem, RunSpec, Solver};
use tempfile::tempdir;

fn jobcd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jobcd")).args(args).output().expect("binary runs")
}

fn read_trace(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "iter,elapsed_s,objective,residual,step_norm_sq");
    lines.map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

fn objectives(rows: &[Vec<String>]) -> Vec<f64> {
    rows.iter().map(|r| r[2].parse().unwrap()).collect()
}

fn assert_non_increasing(f: &[f64]) {
    for w in f.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "objective rose from {} to {}", w[0], w[1]);
    }
}

#[test]
fn gs_hevp_trace_is_monotone() {
    let dir = tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let out = jobcd(&[
        "--problem", "hevp", "--solver", "gs", "--n", "10", "--p", "5", "--m", "20", "--seed", "1", "--time-limit", "5",
        "--trace", trace.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("final_objective,final_residual,iters,elapsed_s\n"), "{stdout}");
    let rows = read_trace(&trace);
    assert!(rows.len() > 2);
    assert_non_increasing(&objectives(&rows));
}

#[test]
fn j_trace_is_monotone() {
    let dir = tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let spec = RunSpec {
        problem: Problem::Quadratic,
        solver: Solver::J,
        n: Some(8),
        p: Some(3),
        seed: 4,
        max_iters: Some(200),
        trace_every: Some(1),
        trace: Some(trace.clone()),
        ..Default::default()
    };
    run(&spec).unwrap();
    assert_non_increasing(&objectives(&read_trace(&trace)));
}

#[test]
fn identical_specs_give_identical_traces() {
    let dir = tempdir().unwrap();
    let mut files = Vec::new();
    for k in 0..2 {
        let untimed = dir.path().join(format!("u{k}.csv"));
        let timed = dir.path().join(format!("t{k}.csv"));
        for (path, timing) in [(&untimed, "false"), (&timed, "true")] {
            let out = jobcd(&[
                "--solver", "gs", "--n", "10", "--p", "5", "--m", "20", "--seed", "1", "--trace-every", "7",
                "--timing", timing, "--trace", path.to_str().unwrap(),
            ]);
            assert!(out.status.success());
        }
        files.push((untimed, timed));
    }
    assert_eq!(fs::read(&files[0].0).unwrap(), fs::read(&files[1].0).unwrap());
    let strip = |p: &Path| -> Vec<Vec<String>> {
        read_trace(p).into_iter().map(|mut r| {
            r.remove(1);
            r
        }).collect()
    };
    assert_eq!(strip(&files[0].1), strip(&files[1].1));
}

#[test]
fn vrj_traces_do_not_depend_on_thread_count() {
    let dir = tempdir().unwrap();
    let mut traces = Vec::new();
    for threads in ["1", "2", "8"] {
        let path = dir.path().join(format!("vrj{threads}.csv"));
        let out = jobcd(&[
            "--solver", "vrj", "--problem", "hevp", "--n", "8", "--p", "4", "--m", "30", "--seed", "3", "--max-iters",
            "60", "--trace-every", "1", "--threads", threads, "--timing", "false", "--trace", path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        traces.push(fs::read(&path).unwrap());
    }
    assert_eq!(traces[0], traces[1]);
    assert_eq!(traces[0], traces[2]);
}

#[test]
fn vrj_rejects_odd_n() {
    let out = jobcd(&["--solver", "vrj", "--n", "9", "--p", "4"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("n must be even"), "{err}");
}

#[test]
fn vrj_needs_finite_sum() {
    let spec = RunSpec { problem: Problem::Quadratic, solver: Solver::Vrj, n: Some(4), ..Default::default() };
    assert!(run(&spec).unwrap_err().to_string().contains("finite-sum"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "problem = quadratic\nsolver=j\nn=6\np=2\nmax-iters=3\nseed=9\n").unwrap();
    let a = Args::from_argv(["jobcd", "--config", cfg.to_str().unwrap(), "--n", "8"]).unwrap();
    let s = a.spec();
    assert_eq!((s.problem, s.solver, s.n, s.p, s.max_iters, s.seed), (Problem::Quadratic, Solver::J, Some(8), Some(2), Some(3), 9));
    let out = jobcd(&["--config", cfg.to_str().unwrap(), "--solver", "gs"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = String::from_utf8(out.stdout).unwrap();
    assert_eq!(summary.lines().nth(1).unwrap().split(',').nth(2), Some("3"));
}

#[test]
fn compare_two_solvers_on_one_seed() {
    let base = RunSpec { n: Some(6), p: Some(3), m: Some(12), seed: 2, max_iters: Some(100), ..Default::default() };
    let specs = [RunSpec { solver: Solver::Gs, ..base.clone() }, RunSpec { solver: Solver::Umcm, ..base }];
    let rows = compare(&specs).unwrap();
    assert_eq!(rows.len(), 2);
    let mut buf = Vec::new();
    write_table(&mut buf, Problem::Hevp, &rows, false).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], TABLE_HEADER.join(","));
    assert!(lines[1].starts_with("hevp,gs,"));
    assert!(lines[2].starts_with("hevp,umcm,"));
    let cell = lines[1].split(',').nth(2).unwrap();
    let (obj, rest) = cell.split_once('(').unwrap();
    assert!(rest.ends_with(')'));
    assert_eq!(obj.split_once('e').unwrap().0.split_once('.').unwrap().1.len(), 2, "{cell}");
}

#[test]
fn compare_cli_marks_failed_rows() {
    let out = jobcd(&["--problem", "quadratic", "--n", "5", "--p", "2", "--max-iters", "5", "--compare", "gs,vrj"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[2].contains("error"), "{text}");
}

#[test]
fn empty_compare_is_header_only() {
    let rows = compare(&[]).unwrap();
    let mut buf = Vec::new();
    write_table(&mut buf, Problem::Hevp, &rows, true).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", TABLE_HEADER.join(",")));
}

#[test]
fn compare_rejects_mismatched_dimensions() {
    let a = RunSpec { n: Some(6), ..Default::default() };
    let b = RunSpec { n: Some(8), solver: Solver::Umcm, ..Default::default() };
    assert!(compare(&[a, b]).is_err());
}

#[test]
fn loads_files_from_disk() {
    let dir = tempdir().unwrap();
    let mtx = dir.path().join("d.mtx");
    fs::write(&mtx, "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n").unwrap();
    let m = load_matrix(&mtx, MatrixFormat::from_path(&mtx)).unwrap();
    assert_eq!((m[(0, 1)], m[(1, 0)]), (3.0, 2.0));
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "1,2\n3,4\n5\n").unwrap();
    let e = load_matrix(&bad, MatrixFormat::Csv).unwrap_err().to_string();
    assert!(e.contains("line 3"), "{e}");
}

#[test]
fn hevp_from_data_file() {
    let dir = tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let rows: Vec<String> = (0..5).map(|i| (0..4).map(|j| format!("{}", ((i * 7 + j * 3) % 5) as f64 - 2.0)).collect::<Vec<_>>().join(",")).collect();
    fs::write(&data, rows.join("\n")).unwrap();
    let summary = dir.path().join("s.csv");
    let out = jobcd(&["--data", data.to_str().unwrap(), "--p", "2", "--max-iters", "20", "--summary", summary.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&summary).unwrap();
    assert_eq!(text.lines().count(), 2);
    let out = jobcd(&["--data", data.to_str().unwrap(), "--n", "6"]);
    assert!(!out.status.success());
}

#[test]
fn hspp_runs_with_baselines() {
    let base = RunSpec { problem: Problem::Hspp, n: Some(4), p: Some(2), m: Some(8), seed: 5, max_iters: Some(30), ..Default::default() };
    for solver in [Solver::Gs, Solver::Vrj, Solver::Admm] {
        let rep = run(&RunSpec { solver, ..base.clone() }).unwrap();
        assert!(rep.final_objective.is_finite());
    }
}
