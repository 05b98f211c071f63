//! `capfield` command-line front end.
//!
//! Exit status: 0 success, 1 a verification or golden-value check did not
//! pass, 2 invalid input, 3 numerical nonconvergence.

// `!(x <= tol)` is used where NaN must fail.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use thiserror::Error;

use args::{Cli, Command, OutputArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] capfield::Error),
    #[error("{0}")]
    Usage(String),
    #[error("non-finite result for {0}")]
    NonFinite(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {msg}", path.display())]
    Golden { path: PathBuf, msg: String },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_nonconvergence() => 3,
            CliError::NonFinite(_) => 3,
            CliError::Failed(_) => 1,
            _ => 2,
        }
    }
}

fn output_args(c: &Command) -> &OutputArgs {
    match c {
        Command::Capacity { out, .. }
        | Command::Support { out, .. }
        | Command::Density { out, .. }
        | Command::Ffunctional { out, .. }
        | Command::Verify { out, .. }
        | Command::Oracle { out, .. }
        | Command::Gonchar { out, .. } => out,
    }
}

fn threads_from_env() -> Result<(), CliError> {
    match std::env::var("CAPFIELD_THREADS") {
        Ok(v) => {
            let n: usize = v.trim().parse().map_err(|_| {
                CliError::Usage(format!(
                    "CAPFIELD_THREADS must be a positive integer, got '{v}'"
                ))
            })?;
            capfield::init_thread_pool(n)?;
            Ok(())
        }
        Err(_) => Ok(()),
    }
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    threads_from_env()?;
    let out = output_args(&cli.command);
    let start = Instant::now();
    let mut outcome = run::execute(&cli.command)?;
    if out.timings {
        outcome
            .summary
            .timings
            .insert("total_s", start.elapsed().as_secs_f64());
    }
    let json = outcome.summary.to_json()?;
    let text = output::pretty(&json);

    if let (Some(path), Some(table)) = (&out.csv, &outcome.table) {
        output::write_file(path, table)?;
    } else if out.csv.is_some() {
        return Err(CliError::Usage(format!(
            "{} writes no table",
            outcome.summary.command
        )));
    }
    if let Some(path) = &out.json {
        output::write_file(path, &text)?;
    }
    print!("{text}");

    if let Some(path) = &out.pin {
        let mut golden = json.clone();
        if let Some(o) = golden.as_object_mut() {
            o.remove("timings");
        }
        output::write_file(path, &output::pretty(&golden))?;
    }
    if let Some(path) = &out.check {
        let raw = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        let golden: serde_json::Value =
            serde_json::from_str(&raw).map_err(|e| CliError::Golden {
                path: path.clone(),
                msg: e.to_string(),
            })?;
        let diffs = output::compare(
            &json,
            &golden,
            output::pin_tolerance(outcome.summary.command),
        );
        if !diffs.is_empty() {
            return Err(CliError::Failed(format!(
                "golden check against {} failed: {}",
                path.display(),
                diffs.join("; ")
            )));
        }
    }
    match outcome.failure {
        Some(msg) => Err(CliError::Failed(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("capfield: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
