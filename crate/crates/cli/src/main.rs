//! `l2geom`: command-line front end for the L² mapping-space geometry engine.
//!
//! Exit codes: 0 success, 1 a check failed or a computation did not
//! succeed, 2 usage or input error.

mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use config::FileConfig;

/// Environment variable holding the default worker cap.
pub const THREADS_ENV: &str = "L2GEOM_THREADS";

/// An error with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    /// Malformed or invalid input: exit 2.
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    /// A computation that did not succeed: exit 1.
    pub fn failure(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

fn thread_cap(cli: &Cli, cfg: &FileConfig) -> Result<Option<usize>, CliError> {
    if let Some(n) = cli.threads.or(cfg.threads) {
        return Ok(Some(n as usize));
    }
    match std::env::var(THREADS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::input(format!(
                "invalid parameter: {THREADS_ENV}={s:?} must be a positive integer"
            ))),
        },
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    if let Some(n) = thread_cap(&cli, &cfg)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::failure(format!("thread pool: {e}")))?;
    }
    commands::dispatch(cli.command, &cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
