use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hqmri_core::degrade::Role;
use hqmri_core::model::{Scheme, Task};
use hqmri_core::objectives::LossPreset;
use serde::Serialize;

#[derive(Parser, Debug, Serialize)]
#[command(name = "hqmri", version, about = "Synthetic MRI degradation, restoration training and evaluation")]
pub struct Cli {
    /// Worker threads for data pipelines and batch backprop (default: all cores)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
pub enum Command {
    /// Generate synthetic phantom subjects, one directory per subject
    Phantom(PhantomArgs),
    /// Build a super-resolution pair corpus from subject directories
    Degrade(DegradeArgs),
    /// Build a motion-artifact pair corpus from subject directories
    Motion(MotionArgs),
    /// Sweep the k-space mask width and print the balance table
    SigmaCal(SigmaCalArgs),
    /// Train a restoration model on a manifest
    Train(TrainArgs),
    /// Evaluate a checkpoint on one split of a manifest
    Eval(EvalArgs),
    /// Apply a checkpoint to every image in a directory
    Restore(RestoreArgs),
    /// Render comparison panels and gradient maps as PGM
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Phantom(_) => "phantom",
            Command::Degrade(_) => "degrade",
            Command::Motion(_) => "motion",
            Command::SigmaCal(_) => "sigma-cal",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Restore(_) => "restore",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct PhantomArgs {
    /// Number of subjects
    #[arg(long, default_value_t = 28)]
    pub n: usize,
    /// Slices per subject
    #[arg(long, default_value_t = 8)]
    pub slices: usize,
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write a PGM preview next to every slice
    #[arg(long)]
    pub pgm: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct SplitArgs {
    /// Subjects per role as train,val,test (default: 21:4:3 proportions)
    #[arg(long, value_parser = parse_split)]
    pub split: Option<(usize, usize, usize)>,
    /// Square crop taken around the image centre (default: full image)
    #[arg(long)]
    pub roi: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct DegradeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub factor: usize,
    /// High-resolution patch side
    #[arg(long, default_value_t = 128)]
    pub patch: usize,
    /// High-resolution patch stride
    #[arg(long, default_value_t = 64)]
    pub stride: usize,
    /// Scale LR with the HR min/max instead of its own
    #[arg(long)]
    pub shared_norm: bool,
    #[command(flatten)]
    pub split: SplitArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct MotionArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub variants: usize,
    /// Replaced-row fraction range lo:hi
    #[arg(long, default_value = "0.05:0.35", value_parser = parse_pair)]
    pub severity: (f64, f64),
    /// Central k-space rows never replaced (0 disables)
    #[arg(long, default_value_t = 8)]
    pub protect_center: usize,
    #[command(flatten)]
    pub split: SplitArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct SigmaCalArgs {
    /// Subject directories, or a directory of .mrir images
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Sweep lo:hi:step
    #[arg(long, default_value = "10:50:1", value_parser = parse_triple)]
    pub range: (f64, f64, f64),
    /// Directory for the table and run manifest (default: current directory)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct LossArgs {
    #[arg(long, default_value = "R4")]
    pub loss: LossPreset,
    #[arg(long)]
    pub w_charb: Option<f64>,
    #[arg(long)]
    pub w_ssim: Option<f64>,
    #[arg(long)]
    pub w_kspace: Option<f64>,
    #[arg(long)]
    pub w_grad: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub kspace_masked: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub grad_amplified: Option<bool>,
    #[arg(long)]
    pub grad_a: Option<f64>,
    #[arg(long)]
    pub mask_sigma: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub task: Task,
    #[arg(long, default_value_t = 2)]
    pub factor: usize,
    #[arg(long, default_value = "post")]
    pub scheme: Scheme,
    #[command(flatten)]
    pub loss: LossArgs,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// 1 stage, 2 groups, 2 blocks, 8 features
    #[arg(long)]
    pub toy: bool,
    /// Add the input to the output (MAR only)
    #[arg(long)]
    pub bypass: bool,
    /// Start the reconstruction layer at zero
    #[arg(long)]
    pub zero_recon: bool,
    #[arg(long, default_value_t = 60)]
    pub epochs: usize,
    #[arg(long, default_value_t = 8)]
    pub batch: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 5)]
    pub warmup: usize,
    #[arg(long, default_value_t = 10)]
    pub halve_every: usize,
    /// Train in double precision
    #[arg(long)]
    pub f64: bool,
    /// Continue from an epoch checkpoint written by an earlier run
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct TileArgs {
    /// Restore tile by tile with this input-side patch size
    #[arg(long, requires = "stride")]
    pub patch: Option<usize>,
    #[arg(long, requires = "patch")]
    pub stride: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, default_value = "test")]
    pub role: Role,
    #[command(flatten)]
    pub tile: TileArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct RestoreArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Expected upscaling factor; checked against the checkpoint
    #[arg(long)]
    pub factor: Option<usize>,
    #[arg(long)]
    pub pgm: bool,
    #[command(flatten)]
    pub tile: TileArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct ReportArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "test")]
    pub role: Role,
    /// Pairs to render
    #[arg(long, default_value_t = 4)]
    pub limit: usize,
    /// Amplification strength of the gradient-map panel
    #[arg(long, default_value_t = 2.5)]
    pub grad_a: f64,
}

fn numbers(s: &str, sep: char, n: usize) -> Result<Vec<String>, String> {
    let parts: Vec<String> = s.split(sep).map(|p| p.trim().to_string()).collect();
    if parts.len() != n {
        return Err(format!("expected {n} values separated by '{sep}', got {s:?}"));
    }
    Ok(parts)
}

fn parse_split(s: &str) -> Result<(usize, usize, usize), String> {
    let v = numbers(s, ',', 3)?
        .iter()
        .map(|p| p.parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((v[0], v[1], v[2]))
}

fn parse_floats(s: &str, n: usize) -> Result<Vec<f64>, String> {
    numbers(s, ':', n)?
        .iter()
        .map(|p| p.parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect()
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let v = parse_floats(s, 2)?;
    Ok((v[0], v[1]))
}

fn parse_triple(s: &str) -> Result<(f64, f64, f64), String> {
    let v = parse_floats(s, 3)?;
    Ok((v[0], v[1], v[2]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn separated_values() {
        assert_eq!(parse_split("21,4,3"), Ok((21, 4, 3)));
        assert!(parse_split("21,4").is_err());
        assert_eq!(parse_pair("0.05:0.35"), Ok((0.05, 0.35)));
        assert_eq!(parse_triple("10:50:1"), Ok((10.0, 50.0, 1.0)));
        assert!(parse_triple("10:x:1").is_err());
    }
}
