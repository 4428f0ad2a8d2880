use std::process::ExitCode;

use clap::Parser;
use dcs_cli::cli::Cli;
use dcs_cli::commands::execute;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, cfg, out) = match cli.resolve() {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match execute(cmd, &cfg, &out) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            for msg in &outcome.failures {
                eprintln!("failed cell: {msg}");
            }
            if outcome.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
