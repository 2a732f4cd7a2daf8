use std::process::ExitCode;

use chaoswave::cli::{run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("chaoswave: {e}");
            ExitCode::FAILURE
        }
    }
}
