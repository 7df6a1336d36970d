use std::io;
use std::process::ExitCode;

use jobcd_cli::io::{create, write_summary};
use jobcd_cli::runner::write_table;
use jobcd_cli::{compare, run, Args, CliError, RunSpec};

fn main() -> ExitCode {
    let args = match Args::from_argv(std::env::args_os()) {
        Ok(a) => a,
        Err(CliError::Args(e)) => e.exit(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(args: &Args) -> jobcd_cli::Result<()> {
    let base = args.spec();
    if args.compare.is_empty() {
        let rep = run(&base)?;
        if base.summary.is_none() {
            write_summary(io::stdout().lock(), &rep, base.timing)?;
        }
        return Ok(());
    }
    let specs: Vec<RunSpec> = args
        .compare
        .iter()
        .map(|&solver| RunSpec { solver, trace: None, summary: None, ..base.clone() })
        .collect();
    let rows = compare(&specs)?;
    match &args.output {
        Some(path) => write_table(create(path)?, base.problem, &rows, base.timing),
        None => write_table(io::stdout().lock(), base.problem, &rows, base.timing),
    }
}
