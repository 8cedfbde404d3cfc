use std::process::ExitCode;

use clap::Parser;
use sparda_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match sparda_cli::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
