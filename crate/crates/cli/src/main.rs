mod args;
mod commands;
mod progress;

use std::process::ExitCode;

use abcmeta_core::batch::BatchParseError;
use clap::Parser;

use crate::args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Estimate(args) => commands::estimate(args),
        Command::Batch(args) => commands::batch(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match e.downcast_ref::<abcmeta_core::Error>() {
                Some(core) => eprintln!("error ({}): {e:#}", core.kind()),
                None => eprintln!("error: {e:#}"),
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for anything the user can fix in the input, 1 otherwise.
fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<BatchParseError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<abcmeta_core::Error>() {
        Some(core) if core.is_validation() => 2,
        _ => 1,
    }
}
