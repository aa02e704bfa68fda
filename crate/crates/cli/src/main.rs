use std::process::ExitCode;

use clap::Parser;
use dort::{run, Cli, ExperimentConfig};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, flags) = cli.command.split();
    let result = ExperimentConfig::resolve(mode, flags).and_then(|cfg| run(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dort: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
