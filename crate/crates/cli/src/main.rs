use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = ader_cli::Cli::parse();
    match ader_cli::execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
