use std::fs;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::data::Pair;
use super::eval::{evaluate, summarize, EvalOptions};
use super::schedule::{lr_at, Precision, TrainConfig};
use crate::error::{Error, Result};
use crate::model::{Checkpoint, Model, OptimizerState};
use crate::objectives::{composite_loss_grad, Aggregate, LossBreakdown, LossWeights};
use crate::rng;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    /// Per-pair mean of every loss term over the epoch.
    pub train: LossBreakdown<f64>,
    pub val_ssim: Option<Aggregate>,
    pub val_psnr: Option<Aggregate>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub records: Vec<EpochRecord>,
    /// Epoch with the highest mean validation SSIM.
    pub best_epoch: Option<usize>,
    /// Batches are reduced in a fixed order, so results do not depend on
    /// the number of worker threads.
    pub deterministic: bool,
}

impl RunLog {
    fn best_ssim(&self) -> Option<f64> {
        let e = self.best_epoch?;
        self.records.iter().find(|r| r.epoch == e)?.val_ssim.map(|a| a.mean)
    }
}

#[derive(Clone, Debug, Default)]
pub struct TrainOptions {
    /// Writes `epoch_NNN.ckpt`, `best.ckpt` and `runlog.json` here.
    pub checkpoint_dir: Option<PathBuf>,
}

pub struct TrainOutcome<T> {
    pub model: Model<T>,
    /// Parameters of the best validation epoch, when known.
    pub best: Option<Model<T>>,
    pub optimizer: OptimizerState<T>,
    pub log: RunLog,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    train: TrainConfig,
    loss: LossWeights,
    log: RunLog,
}

/// Trains from the model's current parameters.
pub fn train<T: Real>(
    model: Model<T>,
    train_set: &[Pair<T>],
    val_set: &[Pair<T>],
    weights: &LossWeights,
    cfg: &TrainConfig,
    opts: &TrainOptions,
) -> Result<TrainOutcome<T>> {
    let adam = Adam::new(model.params(), cfg.beta1, cfg.beta2, cfg.adam_eps);
    let log = RunLog {
        deterministic: true,
        ..Default::default()
    };
    run(model, adam, log, None, 0, train_set, val_set, weights, cfg, opts)
}

/// Continues a run from a checkpoint written after epoch `ckpt.epoch`.
pub fn resume<T: Real>(
    ckpt: &Checkpoint<T>,
    train_set: &[Pair<T>],
    val_set: &[Pair<T>],
    weights: &LossWeights,
    cfg: &TrainConfig,
    opts: &TrainOptions,
) -> Result<TrainOutcome<T>> {
    let meta: Meta = serde_json::from_value(ckpt.meta.clone())
        .map_err(|e| Error::Checkpoint(format!("checkpoint metadata: {e}")))?;
    let same_run = TrainConfig {
        epochs: cfg.epochs,
        ..meta.train.clone()
    };
    if same_run != *cfg || meta.loss != *weights {
        return Err(Error::Checkpoint("training or loss configuration differs from the checkpoint".into()));
    }
    let optimizer = ckpt
        .optimizer
        .clone()
        .ok_or_else(|| Error::Checkpoint("checkpoint holds no optimizer state".into()))?;
    let model = ckpt.model()?;
    let mut adam = Adam::new(model.params(), cfg.beta1, cfg.beta2, cfg.adam_eps);
    adam.state = optimizer;
    let best = match (&opts.checkpoint_dir, meta.log.best_epoch) {
        (Some(dir), Some(_)) if dir.join("best.ckpt").exists() => Some(Checkpoint::read(&dir.join("best.ckpt"))?.model()?),
        _ => None,
    };
    run(model, adam, meta.log, best, ckpt.epoch as usize, train_set, val_set, weights, cfg, opts)
}

fn check_pairs<T: Real>(model: &Model<T>, pairs: &[Pair<T>]) -> Result<()> {
    for p in pairs {
        let dims = model.config().output_dims(p.lq.height(), p.lq.width())?;
        if dims != p.hq.dims() {
            return Err(Error::Dimension(format!(
                "pair {}: model maps {:?} to {dims:?} but the target is {:?}",
                p.id,
                p.lq.dims(),
                p.hq.dims()
            )));
        }
    }
    Ok(())
}

fn mean_breakdown(items: &[LossBreakdown<f64>]) -> LossBreakdown<f64> {
    let n = items.len().max(1) as f64;
    let mean = |f: fn(&LossBreakdown<f64>) -> Option<f64>| {
        let vals: Vec<f64> = items.iter().filter_map(f).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    LossBreakdown {
        total: items.iter().map(|b| b.total).sum::<f64>() / n,
        pixel: mean(|b| b.pixel),
        ssim: mean(|b| b.ssim),
        kspace: mean(|b| b.kspace),
        grad: mean(|b| b.grad),
    }
}

#[allow(clippy::too_many_arguments)]
fn run<T: Real>(
    mut model: Model<T>,
    mut adam: Adam<T>,
    mut log: RunLog,
    mut best: Option<Model<T>>,
    start_epoch: usize,
    train_set: &[Pair<T>],
    val_set: &[Pair<T>],
    weights: &LossWeights,
    cfg: &TrainConfig,
    opts: &TrainOptions,
) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    weights.validate()?;
    if cfg.precision != Precision::of::<T>() {
        return Err(Error::InvalidParameter(format!(
            "configured precision {:?} does not match the scalar type",
            cfg.precision
        )));
    }
    if train_set.is_empty() {
        return Err(Error::Split("training split is empty".into()));
    }
    check_pairs(&model, train_set)?;
    check_pairs(&model, val_set)?;
    if let Some(dir) = &opts.checkpoint_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    for epoch in start_epoch..cfg.epochs {
        let lr = lr_at(epoch, cfg)?;
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        order.shuffle(&mut rng::stream(cfg.seed, &[rng::label("shuffle"), epoch as u64]));
        let mut breakdowns = Vec::with_capacity(order.len());
        for batch in order.chunks(cfg.batch_size) {
            let results = batch
                .par_iter()
                .map(|&i| {
                    let pair = &train_set[i];
                    model.backprop(&pair.lq, |out| {
                        let (b, g) = composite_loss_grad(out, &pair.hq, weights, true)?;
                        Ok((b, g.expect("gradient requested")))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if results.iter().any(|(b, _)| !b.total.is_finite()) {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    pairs: batch.iter().map(|&i| train_set[i].id.clone()).collect(),
                });
            }
            let scale = T::one() / T::lit(batch.len() as f64);
            let mut grads: Vec<Vec<T>> = model.params().iter().map(|p| vec![T::zero(); p.data.len()]).collect();
            for (b, g) in results {
                for (acc, gi) in grads.iter_mut().zip(g) {
                    for (a, v) in acc.iter_mut().zip(gi) {
                        *a = *a + v;
                    }
                }
                breakdowns.push(b.cast::<f64>());
            }
            grads.iter_mut().flatten().for_each(|v| *v = *v * scale);
            adam.step(model.params_mut(), &grads, lr);
        }
        let (val_ssim, val_psnr) = if val_set.is_empty() {
            (None, None)
        } else {
            let report = evaluate(&model, val_set, &EvalOptions::default())?;
            let col = |f: fn(&super::eval::ImageRecord) -> f64| summarize(&report.records.iter().map(f).collect::<Vec<_>>());
            (col(|r| r.ssim_output), col(|r| r.psnr_output))
        };
        let improved = match (val_ssim, log.best_ssim()) {
            (Some(v), Some(b)) => v.mean > b,
            (Some(_), None) => true,
            (None, _) => false,
        };
        log.records.push(EpochRecord {
            epoch,
            lr,
            train: mean_breakdown(&breakdowns),
            val_ssim,
            val_psnr,
        });
        if improved {
            log.best_epoch = Some(epoch);
            best = Some(model.clone());
        }
        if let Some(dir) = &opts.checkpoint_dir {
            let meta = serde_json::to_value(Meta {
                train: cfg.clone(),
                loss: weights.clone(),
                log: log.clone(),
            })
            .expect("metadata serializes");
            let ck = Checkpoint::from_model(&model, (epoch + 1) as u32, meta, Some(adam.state.clone()));
            ck.write(&dir.join(format!("epoch_{:03}.ckpt", epoch + 1)))?;
            if improved {
                ck.write(&dir.join("best.ckpt"))?;
            }
            let path = dir.join("runlog.json");
            let text = serde_json::to_string_pretty(&log).expect("run log serializes");
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(TrainOutcome {
        model,
        best,
        optimizer: adam.state,
        log,
    })
}
