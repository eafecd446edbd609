mod args;
mod commands;
mod serve;

use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;

use args::{Cli, Command};
use commands::CliResult;

fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::Map(c) => commands::map(c),
        Command::Suite(c) => commands::suite(c),
        Command::Run(a) => commands::run(a),
        Command::Interactive(a) => commands::interactive(a),
        Command::Eval(a) => commands::eval(a),
        Command::Serve(a) => {
            let engine = commands::build_engine(&a.engine)?;
            serve::serve(engine, a.addr, Duration::from_secs(a.idle_timeout_secs))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .json()
        .with_writer(std::io::stderr)
        .with_max_level(cli.log_level)
        .init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            tracing::error!(code = e.code, "{}", e.message);
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
