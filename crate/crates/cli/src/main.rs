//! `jeaae`: synth → train → analyze → attack → audit → report.

mod args;
mod commands;
mod exit;
mod manifest;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { 0 });
        }
    };
    if let Some(n) = cli.global.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} workers: {e}");
            return ExitCode::from(exit::USAGE);
        }
    }
    let result = match &cli.command {
        Command::Synth(a) => commands::synth(&cli.global, a),
        Command::Train(a) => commands::train(&cli.global, a),
        Command::Analyze(a) => commands::analyze(&cli.global, a),
        Command::Attack(a) => commands::attack(&cli.global, a),
        Command::Audit(a) => commands::audit(&cli.global, a),
        Command::Report(a) => commands::report(&cli.global, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit::code(&e))
        }
    }
}
