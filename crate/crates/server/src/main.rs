use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_env("MMSUM_LOG"))
        .with_writer(std::io::stderr)
        .init();
    mmsum_server::cli::run(mmsum_server::cli::Cli::parse())
}
