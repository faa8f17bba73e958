use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::Pair;
use crate::degrade::fourier_upsample;
use crate::error::{Error, Result};
use crate::imgcore::Image2D;
use crate::model::{restore_tiled, Model, Task};
use crate::objectives::{aggregate, psnr, ssim_index, Aggregate};
use crate::scalar::Real;

/// Mean and population std of the finite values; a single value gets std 0.
pub fn summarize(values: &[f64]) -> Option<Aggregate> {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    match finite.len() {
        0 => None,
        1 => Some(Aggregate {
            mean: finite[0],
            std: 0.0,
            n: 1,
        }),
        _ => aggregate(&finite).ok(),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Restore tile by tile (`patch`, `stride` in input pixels) and stitch.
    pub tile: Option<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub pair_id: String,
    pub ssim_input: f64,
    pub psnr_input: f64,
    pub ssim_output: f64,
    pub psnr_output: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub records: Vec<ImageRecord>,
    pub ssim_input: Option<Aggregate>,
    pub psnr_input: Option<Aggregate>,
    pub ssim_output: Option<Aggregate>,
    pub psnr_output: Option<Aggregate>,
}

/// Degraded input brought to the target size: zero-filled k-space
/// upsampling for SR, the input itself for MAR. Clamped to [0,1].
pub fn input_baseline<T: Real>(lq: &Image2D<T>, task: Task, factor: usize) -> Result<Image2D<T>> {
    Ok(match task {
        Task::Sr => fourier_upsample(lq, factor)?.clamp_unit(),
        Task::Mar => lq.clamp_unit(),
    })
}

/// Clamped network output for one input.
pub fn restore<T: Real>(model: &Model<T>, lq: &Image2D<T>, opts: &EvalOptions) -> Result<Image2D<T>> {
    Ok(match opts.tile {
        Some((patch, stride)) => restore_tiled(model, lq, patch, stride)?,
        None => model.forward(lq)?.clamp_unit(),
    })
}

fn score<T: Real>(x: &Image2D<T>, y: &Image2D<T>) -> Result<(f64, f64)> {
    let (x, y) = (x.cast::<f64>(), y.cast::<f64>());
    Ok((ssim_index(&x, &y)?, psnr(&x, &y, 1.0)?))
}

/// SSIM/PSNR of the restored output and of the input baseline against the
/// reference, per pair and aggregated.
pub fn evaluate<T: Real>(model: &Model<T>, pairs: &[Pair<T>], opts: &EvalOptions) -> Result<EvalReport> {
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("no pairs to evaluate".into()));
    }
    let cfg = model.config();
    let records = pairs
        .par_iter()
        .map(|p| {
            let dims = cfg.output_dims(p.lq.height(), p.lq.width())?;
            if dims != p.hq.dims() {
                return Err(Error::Dimension(format!(
                    "pair {}: model maps {:?} to {dims:?} but the reference is {:?}",
                    p.id,
                    p.lq.dims(),
                    p.hq.dims()
                )));
            }
            let baseline = input_baseline(&p.lq, cfg.task, cfg.sr_factor)?;
            let out = restore(model, &p.lq, opts)?;
            let (ssim_input, psnr_input) = score(&baseline, &p.hq)?;
            let (ssim_output, psnr_output) = score(&out, &p.hq)?;
            Ok(ImageRecord {
                pair_id: p.id.clone(),
                ssim_input,
                psnr_input,
                ssim_output,
                psnr_output,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let col = |f: fn(&ImageRecord) -> f64| summarize(&records.iter().map(f).collect::<Vec<_>>());
    Ok(EvalReport {
        task: cfg.task,
        ssim_input: col(|r| r.ssim_input),
        psnr_input: col(|r| r.psnr_input),
        ssim_output: col(|r| r.ssim_output),
        psnr_output: col(|r| r.psnr_output),
        records,
    })
}

impl EvalReport {
    /// Summary table (metric × mean, std, n) followed by per-image lines.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let (input, output) = match self.task {
            Task::Sr => ("zero-filled", "sr"),
            Task::Mar => ("ma", "mar"),
        };
        let _ = writeln!(s, "{:<18} {:>10} {:>10} {:>6}", "metric", "mean", "std", "n");
        for (name, agg) in [
            (format!("ssim_{input}"), self.ssim_input),
            (format!("ssim_{output}"), self.ssim_output),
            (format!("psnr_{input}"), self.psnr_input),
            (format!("psnr_{output}"), self.psnr_output),
        ] {
            match agg {
                Some(a) => {
                    let _ = writeln!(s, "{name:<18} {:>10.4} {:>10.4} {:>6}", a.mean, a.std, a.n);
                }
                None => {
                    let _ = writeln!(s, "{name:<18} {:>10} {:>10} {:>6}", "-", "-", 0);
                }
            }
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "pair_id\tssim_{input}\tssim_{output}\tpsnr_{input}\tpsnr_{output}"
        );
        for r in &self.records {
            let _ = writeln!(
                s,
                "{}\t{:.6}\t{:.6}\t{:.4}\t{:.4}",
                r.pair_id, r.ssim_input, r.ssim_output, r.psnr_input, r.psnr_output
            );
        }
        s
    }
}
