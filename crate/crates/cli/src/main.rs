mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use config::{Cli, RunConfig, OUT_ENV};

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Config(String),
    /// Computation finished but a numeric bound was not met.
    #[error("{0}")]
    Bound(String),
    #[error(transparent)]
    Core(#[from] hslab_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        use hslab_core::Error as E;
        match self {
            Failure::Config(_) => 2,
            Failure::Bound(_) => 3,
            Failure::Io(_) => 4,
            Failure::Core(e) => match e {
                E::Degenerate { .. } | E::Collapsed(_) | E::Underflow { .. } => 3,
                E::Io(_) => 4,
                _ => 2,
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let env_out = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    let cfg = RunConfig::new(cli, env_out);
    match commands::run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hslab: {e}");
            ExitCode::from(e.code())
        }
    }
}
