use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::args::Cli;
use crate::commands::Outcome;

pub const RUN_MANIFEST: &str = "run_manifest.json";

/// Everything needed to replay a subcommand.
#[derive(Serialize)]
pub struct RunManifest<'a> {
    pub command_line: &'a [String],
    pub subcommand: &'static str,
    pub config: &'a Cli,
    pub seed: Option<u64>,
    pub inputs: &'a [PathBuf],
    pub outputs: &'a [PathBuf],
    pub version: &'static str,
    pub finished_unix_s: u64,
    pub wall_clock_s: f64,
}

impl<'a> RunManifest<'a> {
    pub fn new(argv: &'a [String], cli: &'a Cli, outcome: &'a Outcome, elapsed: Duration) -> Self {
        Self {
            command_line: argv,
            subcommand: cli.command.name(),
            config: cli,
            seed: outcome.seed,
            inputs: &outcome.inputs,
            outputs: &outcome.outputs,
            version: env!("CARGO_PKG_VERSION"),
            finished_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            wall_clock_s: elapsed.as_secs_f64(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(RUN_MANIFEST);
        let json = serde_json::to_string_pretty(self)?;
        fs::write(&path, json).with_context(|| format!("writing {}", path.display()))
    }
}
