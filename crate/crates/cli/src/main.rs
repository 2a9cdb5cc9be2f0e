use std::process::ExitCode;

use clap::Parser;
use shapfoil_cli::commands::{run, Cli};

fn main() -> ExitCode {
    let raw: Vec<_> = std::env::args_os().collect();
    let cli = Cli::parse_from(&raw);
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli, &raw[1..]) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
