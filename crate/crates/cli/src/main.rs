mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::Parser;
use sparsecast_core::Error;

use crate::args::{Cli, Command};

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Argument(_) | Error::Dimension(_) | Error::Parse { .. } => 2,
        Error::Numerical { .. } => 3,
        Error::Io(_) => 4,
        Error::Csv(c) if c.is_io_error() => 4,
        Error::Csv(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(a) => commands::synth::run(a),
        Command::Ingest(a) => commands::ingest::run(a),
        Command::Decompose(a) => commands::decompose::run(a),
        Command::Predict(a) => commands::predict::run(a),
        Command::Evaluate(a) => commands::evaluate::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
