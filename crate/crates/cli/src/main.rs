mod args;
mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Status;

const EXIT_CLAIM_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn init_threads() {
    if let Some(n) = std::env::var("EDM_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn run(cli: &Cli) -> anyhow::Result<Status> {
    match &cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::Coherence(a) => commands::coherence(a),
        Command::Verify(a) => commands::verify(a),
        Command::Complete(a) => commands::complete(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Section4(a) => commands::section4(a),
    }
}

fn main() -> ExitCode {
    let argv = match config::expand(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    init_threads();
    match run(&cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::ClaimFailed) => ExitCode::from(EXIT_CLAIM_FAILED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
