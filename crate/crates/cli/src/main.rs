use std::io::IsTerminal;

use clap::Parser;
use geocell_kit::cli::Cli;
use geocell_kit::commands;
use geocell_kit::error::ErrorReport;
use tracing_subscriber::EnvFilter;

fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .with_target(false)
        .init();
    let cli = Cli::parse();
    if let Err(err) = commands::run(cli) {
        let report = ErrorReport::from_error(&err);
        eprintln!("{}", serde_json::to_string(&report).expect("report serializes"));
        std::process::exit(report.exit_code);
    }
}
