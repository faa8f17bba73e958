mod args;
mod commands;
mod run_manifest;

use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use args::{Cli, Command};
use clap::Parser;
use run_manifest::RunManifest;

fn dispatch(cli: &Cli) -> Result<commands::Outcome> {
    match &cli.command {
        Command::Phantom(a) => commands::phantom(a),
        Command::Degrade(a) => commands::degrade(a),
        Command::Motion(a) => commands::motion(a),
        Command::SigmaCal(a) => commands::sigma_cal(a),
        Command::Train(a) => commands::train_cmd(a),
        Command::Eval(a) => commands::eval_cmd(a),
        Command::Restore(a) => commands::restore_cmd(a),
        Command::Report(a) => commands::report_cmd(a),
    }
}

fn run(cli: &Cli, argv: &[String]) -> Result<()> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let started = Instant::now();
    let outcome = dispatch(cli)?;
    let manifest = RunManifest::new(argv, cli, &outcome, started.elapsed());
    manifest.write(&outcome.out_dir)?;
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
