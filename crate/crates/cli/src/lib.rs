//! Command-line front end: parses flags, runs one subcommand, writes the
//! JSON report and a plain-text summary.
//!
//! Exit codes: 0 when every check passes, 1 on a failed check or evaluation
//! error, 2 on bad flags or an unusable structure.

pub mod args;
pub mod commands;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

pub use args::{Cli, Command, Options};
pub use commands::{execute, CliError};
pub use output::{Report, Row};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Runs the tool on `argv` (program name first) and returns the exit code.
///
/// With `--out` the report goes to that file and the summary to stdout;
/// otherwise the report goes to stdout and the summary to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_USAGE,
            };
        }
    };
    let report = match execute(cli.command, &cli.options) {
        Ok(r) => r,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            return EXIT_FAIL;
        }
    };
    let json = report.json_text();
    match &cli.options.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &json) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_USAGE;
            }
            print!("{}", report.summary());
        }
        None => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(json.as_bytes());
            eprint!("{}", report.summary());
        }
    }
    if report.passed() {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}
