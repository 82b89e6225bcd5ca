//! `qpvlab`: reproducible experiments with JSON reports.
//!
//! Exit codes: 0 when the checked property holds, 2 when it fails, 1 on any
//! usage or input error.

mod args;
mod commands;
mod config;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;

/// Any failure that ends the run with exit code 1.
#[derive(Debug)]
pub struct Failure(pub String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

pub type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    // A panic is a bug, but the exit-code contract still holds.
    std::panic::set_hook(Box::new(|info| eprintln!("error: internal failure: {info}")));
    let code = match std::panic::catch_unwind(|| commands::run(cli)) {
        Ok(Ok(code)) => code,
        Ok(Err(Failure(msg))) => {
            eprintln!("error: {msg}");
            1
        }
        Err(_) => 1,
    };
    let _ = std::io::stdout().flush();
    ExitCode::from(code)
}
