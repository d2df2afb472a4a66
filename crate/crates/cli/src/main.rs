mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

use config::{Cli, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] weakdistill::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{failed} of {total} cells exhausted the rejection budget; partial output written to {dir}")]
    PartialMap { failed: usize, total: usize, dir: String },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use weakdistill::Error as E;
        match self {
            CliError::Config(_) | CliError::Core(E::InvalidParameter { .. } | E::OrderingViolation { .. }) => 2,
            CliError::Core(E::AlreadyMaximal) => 3,
            CliError::Core(E::RejectionBudgetExceeded { .. }) | CliError::PartialMap { .. } => 4,
            _ => 1,
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(cli)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    commands::dispatch(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("weakdistill: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
