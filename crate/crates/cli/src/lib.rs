//! Batch front end: each subcommand resolves a [`config::RunConfig`],
//! runs one pipeline and maps its outcome to an exit code.

pub mod args;
pub mod commands;
pub mod config;

use std::ffi::OsString;

use clap::Parser;

use args::{Cli, Command};
use commands::{COMPUTE_ERROR, CONFIG_ERROR};
use config::Needs;

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { CONFIG_ERROR } else { 0 };
        }
    };
    let needs = match cli.command {
        Command::Envelope { .. } => Needs::Nothing,
        Command::Decide { .. } | Command::Solve { .. } => Needs::Xi0,
        Command::Verify { .. } => Needs::Mesh,
        Command::Sweep { .. } => Needs::Sweep,
    };
    let resolved = match cli.merged_config().and_then(|c| c.resolve(needs)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return CONFIG_ERROR;
        }
    };
    let result = match cli.command {
        Command::Envelope { .. } => commands::envelope(&resolved),
        Command::Decide { .. } => commands::decide(&resolved),
        Command::Solve { .. } => commands::solve(&resolved),
        Command::Verify { .. } => commands::verify(&resolved),
        Command::Sweep { .. } => commands::sweep_cmd(&resolved),
    };
    match result {
        Ok(outcome) => outcome.code(),
        Err(e) => {
            eprintln!("error: {e:#}");
            COMPUTE_ERROR
        }
    }
}

pub use commands::Outcome;
pub use commands::{SweepRow, VerifyReport};
