//! Command-line front end for the `vofrac` engine.
//!
//! Exit status: 0 on success, 1 for invalid input, 2 for numerical failures
//! (band, pole, resolution, ...), 3 when `solve --strict` does not converge.
//! Diagnostics go to stderr, one per line, prefixed `E:<code>:`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
pub mod io;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use args::Cli;
pub use commands::CliError;
pub use io::{emit_grid, ingest_csv, IoError};

use args::Command;
use commands::{CliResult, Output};

/// Environment variable capping the worker threads (0 or unset: automatic).
pub const THREADS_VAR: &str = "VOFRAC_THREADS";

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::invalid(format!("{THREADS_VAR} must be a non-negative integer, got `{raw}`")))?;
    if n > 0 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<(Output, Option<std::path::PathBuf>, bool)> {
    configure_threads()?;
    Ok(match cli.command {
        Command::Differint(a) => {
            let out = a.output.out.clone();
            (commands::differint(a)?, out, false)
        }
        Command::Compare(a) => {
            let out = a.output.out.clone();
            (commands::compare_cmd(a)?, out, false)
        }
        Command::Calibrate(a) => {
            let out = a.output.out.clone();
            (commands::calibrate_cmd(a)?, out, false)
        }
        Command::Sweep(a) => {
            let out = a.output.out.clone();
            (commands::sweep(a)?, out, false)
        }
        Command::Solve(a) => {
            let out = a.output.out.clone();
            let strict = a.strict;
            (commands::solve(a)?, out, strict)
        }
    })
}

fn diagnostic(stderr: &mut dyn Write, code: &str, message: &str) {
    let _ = writeln!(stderr, "E:{code}: {}", message.replace('\n', " "));
}

/// Runs one command with explicit output streams and returns the exit status.
pub fn run_with<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            diagnostic(stderr, "usage", first.trim_start_matches("error: "));
            return 1;
        }
    };
    let (output, path, strict) = match dispatch(cli) {
        Ok(v) => v,
        Err(e) => {
            diagnostic(stderr, &e.code, &e.message);
            return e.exit;
        }
    };
    let written = match &path {
        Some(p) => std::fs::write(p, &output.text).map_err(|e| format!("{}: {e}", p.display())),
        None => stdout.write_all(output.text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(message) = written {
        diagnostic(stderr, "io", &message);
        return 1;
    }
    match output.nonconverged {
        Some(message) if strict => {
            diagnostic(stderr, "nonconverged", &message);
            3
        }
        _ => 0,
    }
}

/// Runs one command against the process's stdout and stderr.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}
