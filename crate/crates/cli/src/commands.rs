use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use hqmri_core::degrade::{
    build_sr_dataset, list_subject_dirs, load_subject, Manifest, NormalizationMode, Role, SrDatasetOptions, SrPairSpec,
    SubjectVolume,
};
use hqmri_core::imgcore::{make_subject, read_image, write_image, write_pgm, Dtype, Image2D, PhantomSpec};
use hqmri_core::kspace::{select_sigma, SigmaSweep};
use hqmri_core::model::{build_model, checkpoint_dtype, Checkpoint, Model, ModelConfig, Task};
use hqmri_core::motion::{build_mar_dataset, MarDatasetOptions, MotionSynthesis};
use hqmri_core::objectives::{amplify_grad, grad_map, LossWeights};
use hqmri_core::trainer::{
    evaluate, input_baseline, load_pairs, restore, resume, train, EvalOptions, Pair, Precision, SplitCounts,
    TrainConfig, TrainOptions,
};
use hqmri_core::{rng, Real};
use rayon::prelude::*;

use crate::args::{
    DegradeArgs, EvalArgs, LossArgs, MotionArgs, PhantomArgs, ReportArgs, RestoreArgs, SigmaCalArgs, SplitArgs,
    TileArgs, TrainArgs,
};

/// Paths a subcommand read and wrote, for the run manifest.
pub struct Outcome {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn require_distinct(input: &Path, out: &Path) -> Result<()> {
    let same = match (input.canonicalize(), out.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    };
    ensure!(!same, "output directory {} would overwrite the input", out.display());
    Ok(())
}

fn load_subjects(root: &Path) -> Result<Vec<SubjectVolume<f32>>> {
    let dirs = list_subject_dirs(root)?;
    ensure!(!dirs.is_empty(), "{} holds no subject directories", root.display());
    Ok(dirs.iter().map(|d| load_subject(d)).collect::<hqmri_core::Result<_>>()?)
}

fn split_counts(split: &SplitArgs, n: usize) -> SplitCounts {
    split
        .split
        .map(|(t, v, s)| SplitCounts::new(t, v, s))
        .unwrap_or_else(|| SplitCounts::scaled(n))
}

pub fn phantom(a: &PhantomArgs) -> Result<Outcome> {
    ensure!(a.n > 0 && a.slices > 0, "need at least one subject and one slice");
    create_dir(&a.out)?;
    let width = a.n.saturating_sub(1).to_string().len().max(2);
    let dirs = (0..a.n)
        .into_par_iter()
        .map(|i| -> Result<PathBuf> {
            let spec = PhantomSpec {
                seed: rng::stream_seed(a.seed, &[rng::label("phantom"), i as u64]),
                size: a.size,
                ..PhantomSpec::default()
            };
            let slices = make_subject::<f32>(&spec, a.slices)?;
            let dir = a.out.join(format!("subj{i:0width$}"));
            create_dir(&dir)?;
            for (z, s) in slices.iter().enumerate() {
                write_image(s, dir.join(format!("z{z:03}.mrir")))?;
                if a.pgm {
                    write_pgm(s, dir.join(format!("z{z:03}.pgm")))?;
                }
            }
            Ok(dir)
        })
        .collect::<Result<Vec<_>>>()?;
    println!("wrote {} subjects x {} slices of {}x{} to {}", a.n, a.slices, a.size, a.size, a.out.display());
    Ok(Outcome {
        out_dir: a.out.clone(),
        seed: Some(a.seed),
        inputs: vec![],
        outputs: dirs,
    })
}

fn print_roles(manifest: &Manifest) {
    for role in Role::ALL {
        println!(
            "{role:<5} {:>3} subjects {:>6} pairs",
            manifest.subjects(role).len(),
            manifest.role(role).count()
        );
    }
}

pub fn degrade(a: &DegradeArgs) -> Result<Outcome> {
    require_distinct(&a.input, &a.out)?;
    let volumes = load_subjects(&a.input)?;
    let spec = SrPairSpec::new(a.factor, a.patch, a.stride)?;
    let options = SrDatasetOptions {
        roi: a.split.roi.unwrap_or(volumes[0].slices[0].height()),
        normalization: if a.shared_norm {
            NormalizationMode::Shared
        } else {
            NormalizationMode::Independent
        },
    };
    create_dir(&a.out)?;
    let split = split_counts(&a.split, volumes.len());
    let manifest = build_sr_dataset(&volumes, &spec, split, a.split.seed, &options, &a.out)?;
    print_roles(&manifest);
    Ok(Outcome {
        out_dir: a.out.clone(),
        seed: Some(a.split.seed),
        inputs: vec![a.input.clone()],
        outputs: vec![a.out.join("manifest.tsv"), a.out.join("lq"), a.out.join("hq")],
    })
}

pub fn motion(a: &MotionArgs) -> Result<Outcome> {
    require_distinct(&a.input, &a.out)?;
    let volumes = load_subjects(&a.input)?;
    let options = MarDatasetOptions {
        roi: a.split.roi.unwrap_or(volumes[0].slices[0].height()),
        synthesis: MotionSynthesis {
            variants: a.variants,
            severity: a.severity,
            protect_center: a.protect_center,
            ..MotionSynthesis::default()
        },
    };
    create_dir(&a.out)?;
    let split = split_counts(&a.split, volumes.len());
    let (manifest, _) = build_mar_dataset(&volumes, split, a.split.seed, &options, &a.out)?;
    print_roles(&manifest);
    Ok(Outcome {
        out_dir: a.out.clone(),
        seed: Some(a.split.seed),
        inputs: vec![a.input.clone()],
        outputs: vec![
            a.out.join("manifest.tsv"),
            a.out.join(hqmri_core::motion::PLAN_SIDECAR),
            a.out.join("ma"),
            a.out.join("gt"),
        ],
    })
}

pub fn sigma_cal(a: &SigmaCalArgs) -> Result<Outcome> {
    let dirs = list_subject_dirs(&a.input)?;
    let images: Vec<Image2D<f64>> = if dirs.is_empty() {
        load_subject(&a.input)?.slices
    } else {
        load_subjects(&a.input)?
            .into_iter()
            .flat_map(|v| v.slices)
            .map(|s| s.cast())
            .collect()
    };
    let (lo, hi, step) = a.range;
    let selection = select_sigma(&images, SigmaSweep { lo, hi, step })?;
    let mut table = String::from("sigma\tJ\n");
    for (sigma, cost) in &selection.table {
        table.push_str(&format!("{sigma}\t{cost:.6e}\n"));
    }
    print!("{table}");
    println!("selected sigma = {} ({} images)", selection.sigma, images.len());
    let out_dir = a.out.clone().unwrap_or_else(|| PathBuf::from("."));
    require_distinct(&a.input, &out_dir)?;
    create_dir(&out_dir)?;
    let path = out_dir.join("sigma_table.tsv");
    fs::write(&path, table).with_context(|| format!("writing {}", path.display()))?;
    Ok(Outcome {
        out_dir,
        seed: None,
        inputs: vec![a.input.clone()],
        outputs: vec![path],
    })
}

fn loss_weights(a: &LossArgs) -> Result<LossWeights> {
    let mut w = LossWeights::preset(a.loss);
    let set = |field: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *field = v;
        }
    };
    set(&mut w.w_charbonnier, a.w_charb);
    set(&mut w.w_ssim, a.w_ssim);
    set(&mut w.w_kspace, a.w_kspace);
    set(&mut w.w_grad, a.w_grad);
    set(&mut w.grad_a, a.grad_a);
    w.kspace_masked = a.kspace_masked.unwrap_or(w.kspace_masked);
    w.grad_amplified = a.grad_amplified.unwrap_or(w.grad_amplified);
    w.mask_sigma = a.mask_sigma.or(w.mask_sigma);
    w.validate()?;
    Ok(w)
}

fn manifest_root(path: &Path) -> Result<(Manifest, PathBuf)> {
    let manifest = Manifest::read(path)?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((manifest, root))
}

pub fn train_cmd(a: &TrainArgs) -> Result<Outcome> {
    if a.f64 {
        train_as::<f64>(a)
    } else {
        train_as::<f32>(a)
    }
}

fn train_as<T: Real>(a: &TrainArgs) -> Result<Outcome> {
    let (manifest, root) = manifest_root(&a.manifest)?;
    let train_set = load_pairs::<T>(&manifest, &root, Role::Train)?;
    let val_set = load_pairs::<T>(&manifest, &root, Role::Val)?;
    let weights = loss_weights(&a.loss)?;
    let cfg = TrainConfig {
        batch_size: a.batch,
        epochs: a.epochs,
        base_lr: a.lr,
        warmup_epochs: a.warmup,
        halve_every: a.halve_every,
        seed: a.seed,
        precision: Precision::of::<T>(),
        ..TrainConfig::default()
    };
    create_dir(&a.out)?;
    let opts = TrainOptions {
        checkpoint_dir: Some(a.out.clone()),
    };
    let mut inputs = vec![a.manifest.clone()];
    let outcome = match &a.resume {
        Some(path) => {
            inputs.push(path.clone());
            let ck = Checkpoint::<T>::read(path)?;
            resume(&ck, &train_set, &val_set, &weights, &cfg, &opts)?
        }
        None => {
            let mut mc = if a.toy {
                ModelConfig::toy(a.task, a.factor, a.scheme)
            } else {
                ModelConfig::paper(a.task, a.factor, a.scheme)
            };
            mc.input_bypass = a.bypass;
            let mut model = build_model::<T>(&mc, a.seed)?;
            if a.zero_recon {
                model.zero_reconstruction();
            }
            println!("{} parameters, {} train / {} val pairs", model.parameter_count(), train_set.len(), val_set.len());
            train(model, &train_set, &val_set, &weights, &cfg, &opts)?
        }
    };
    for r in &outcome.log.records {
        let val = r.val_ssim.map(|s| format!("{s}")).unwrap_or_else(|| "-".into());
        println!("epoch {:>3}  lr {:.3e}  loss {:.6}  val ssim {val}", r.epoch, r.lr, r.train.total);
    }
    if let Some(e) = outcome.log.best_epoch {
        println!("best epoch {e}");
    }
    let mut outputs: Vec<PathBuf> = outcome
        .log
        .records
        .iter()
        .map(|r| a.out.join(format!("epoch_{:03}.ckpt", r.epoch + 1)))
        .collect();
    outputs.extend([a.out.join("best.ckpt"), a.out.join("runlog.json")]);
    Ok(Outcome {
        out_dir: a.out.clone(),
        seed: Some(a.seed),
        inputs,
        outputs,
    })
}

fn stored_dtype(path: &Path) -> Result<Dtype> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(checkpoint_dtype(&bytes).with_context(|| path.display().to_string())?)
}

fn load_model<T: Real>(path: &Path) -> Result<Model<T>> {
    Ok(Checkpoint::<T>::read(path)?.model()?)
}

fn eval_options(t: &TileArgs) -> EvalOptions {
    EvalOptions {
        tile: t.patch.zip(t.stride),
    }
}

pub fn eval_cmd(a: &EvalArgs) -> Result<Outcome> {
    match stored_dtype(&a.ckpt)? {
        Dtype::F32 => eval_as::<f32>(a),
        Dtype::F64 => eval_as::<f64>(a),
    }
}

fn eval_as<T: Real>(a: &EvalArgs) -> Result<Outcome> {
    let model = load_model::<T>(&a.ckpt)?;
    let (manifest, root) = manifest_root(&a.manifest)?;
    let pairs = load_pairs::<T>(&manifest, &root, a.role)?;
    ensure!(!pairs.is_empty(), "manifest holds no {} pairs", a.role);
    let report = evaluate(&model, &pairs, &eval_options(&a.tile))?;
    let text = report.render();
    print!("{text}");
    let out_dir = a.report.parent().map(Path::to_path_buf).unwrap_or_default();
    if !out_dir.as_os_str().is_empty() {
        create_dir(&out_dir)?;
    }
    fs::write(&a.report, text).with_context(|| format!("writing {}", a.report.display()))?;
    Ok(Outcome {
        out_dir,
        seed: None,
        inputs: vec![a.ckpt.clone(), a.manifest.clone()],
        outputs: vec![a.report.clone()],
    })
}

pub fn restore_cmd(a: &RestoreArgs) -> Result<Outcome> {
    match stored_dtype(&a.ckpt)? {
        Dtype::F32 => restore_as::<f32>(a),
        Dtype::F64 => restore_as::<f64>(a),
    }
}

fn restore_as<T: Real>(a: &RestoreArgs) -> Result<Outcome> {
    let model = load_model::<T>(&a.ckpt)?;
    let cfg = model.config();
    let scale = match cfg.task {
        Task::Sr => cfg.sr_factor,
        Task::Mar => 1,
    };
    if let Some(f) = a.factor {
        ensure!(f == scale, "checkpoint upscales by {scale}, not {f}");
    }
    require_distinct(&a.input, &a.out)?;
    let mut files: Vec<PathBuf> = fs::read_dir(&a.input)
        .with_context(|| format!("reading {}", a.input.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "mrir"))
        .collect();
    files.sort();
    ensure!(!files.is_empty(), "{} holds no .mrir images", a.input.display());
    create_dir(&a.out)?;
    let opts = eval_options(&a.tile);
    let mut outputs = Vec::with_capacity(files.len());
    for f in &files {
        let img = read_image::<T>(f)?;
        let out = restore(&model, &img, &opts).with_context(|| f.display().to_string())?;
        let name = f.file_name().expect("listed file has a name");
        let dst = a.out.join(name);
        write_image(&out, &dst)?;
        if a.pgm {
            write_pgm(&out, dst.with_extension("pgm"))?;
        }
        outputs.push(dst);
    }
    println!("restored {} images into {}", files.len(), a.out.display());
    Ok(Outcome {
        out_dir: a.out.clone(),
        seed: None,
        inputs: vec![a.ckpt.clone(), a.input.clone()],
        outputs,
    })
}

/// Side-by-side panels separated by a white two-pixel gutter.
pub fn hconcat<T: Real>(panels: &[&Image2D<T>]) -> Result<Image2D<T>> {
    const GUTTER: usize = 2;
    let h = panels.first().map(|p| p.height()).unwrap_or(0);
    if panels.iter().any(|p| p.height() != h) {
        bail!("panels differ in height");
    }
    let mut offsets = Vec::with_capacity(panels.len());
    let mut width = 0;
    for (i, p) in panels.iter().enumerate() {
        if i > 0 {
            width += GUTTER;
        }
        offsets.push(width);
        width += p.width();
    }
    Ok(Image2D::from_fn(h, width, |r, c| {
        panels
            .iter()
            .zip(&offsets)
            .find(|(p, &o)| c >= o && c < o + p.width())
            .map(|(p, &o)| p.row(r)[c - o])
            .unwrap_or_else(T::one)
    }))
}

pub fn report_cmd(a: &ReportArgs) -> Result<Outcome> {
    match stored_dtype(&a.ckpt)? {
        Dtype::F32 => report_as::<f32>(a),
        Dtype::F64 => report_as::<f64>(a),
    }
}

fn report_as<T: Real>(a: &ReportArgs) -> Result<Outcome> {
    let model = load_model::<T>(&a.ckpt)?;
    let (manifest, root) = manifest_root(&a.manifest)?;
    let pairs: Vec<Pair<T>> = load_pairs::<T>(&manifest, &root, a.role)?
        .into_iter()
        .take(a.limit)
        .collect();
    ensure!(!pairs.is_empty(), "manifest holds no {} pairs", a.role);
    create_dir(&a.out)?;
    let cfg = model.config();
    let mut outputs = Vec::new();
    for p in &pairs {
        let restored = restore(&model, &p.lq, &EvalOptions::default())?;
        let input = input_baseline(&p.lq, cfg.task, cfg.sr_factor)?;
        let diff = restored.zip_map(&p.hq, |x, y| (x - y).abs())?;
        let panel = hconcat(&[&input, &restored, &p.hq, &diff])?;
        let path = a.out.join(format!("{}_panel.pgm", p.id));
        write_pgm(&panel, &path)?;
        outputs.push(path);
        let g = grad_map(&p.hq)?;
        let amplified = amplify_grad(&g, T::lit(a.grad_a));
        let path = a.out.join(format!("{}_grad.pgm", p.id));
        write_pgm(&hconcat(&[&g, &amplified])?, &path)?;
        outputs.push(path);
    }
    let report = evaluate(&model, &pairs, &EvalOptions::default())?;
    let path = a.out.join("report.txt");
    fs::write(&path, report.render()).with_context(|| format!("writing {}", path.display()))?;
    outputs.push(path);
    println!("rendered {} pairs into {}", pairs.len(), a.out.display());
    Ok(Outcome {
        out_dir: a.out.clone(),
        seed: None,
        inputs: vec![a.ckpt.clone(), a.manifest.clone()],
        outputs,
    })
}
