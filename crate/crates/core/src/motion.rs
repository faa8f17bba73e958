//! Retrospective motion artifacts by splicing phase-encoding lines.
//!
//! Rows of the standard-layout spectrum are phase-encoding lines. A plan
//! lists rigidly moved copies of the image and which row segments of the
//! original k-space are overwritten with the matching rows of each copy.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::degrade::{crop_roi, Augmentation, Manifest, ManifestRecord, Role, SubjectVolume};
use crate::error::{Error, Result};
use crate::imgcore::{normalize_unit, write_image_as, Dtype, Image2D};
use crate::kspace::{fft2_ortho, ifft2_ortho, Layout, Spectrum2D};
use crate::rng;
use crate::scalar::Real;
use crate::trainer::{split_subjects, SplitCounts};

/// Integer translation followed by an in-plane rotation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Move {
    /// Columns, positive to the right.
    pub dx: i32,
    /// Rows, positive downwards.
    pub dy: i32,
    pub angle_deg: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub row_start: usize,
    pub row_len: usize,
    pub move_index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionPlan {
    pub moves: Vec<Move>,
    pub segments: Vec<Segment>,
    /// Replaced rows over total rows.
    pub severity: f64,
}

impl MotionPlan {
    pub fn new(moves: Vec<Move>, segments: Vec<Segment>, height: usize) -> Result<Self> {
        let rows: usize = segments.iter().map(|s| s.row_len).sum();
        let plan = Self {
            moves,
            segments,
            severity: if height == 0 { 0.0 } else { rows as f64 / height as f64 },
        };
        plan.validate(height)?;
        Ok(plan)
    }

    pub fn identity() -> Self {
        Self {
            moves: Vec::new(),
            segments: Vec::new(),
            severity: 0.0,
        }
    }

    pub fn replaced_rows(&self) -> usize {
        self.segments.iter().map(|s| s.row_len).sum()
    }

    pub fn validate(&self, height: usize) -> Result<()> {
        let mut spans: Vec<(usize, usize)> = Vec::with_capacity(self.segments.len());
        for s in &self.segments {
            if s.row_len == 0 {
                return Err(Error::Plan("empty segment".into()));
            }
            if s.row_start + s.row_len > height {
                return Err(Error::Plan(format!(
                    "segment rows {}..{} exceed height {height}",
                    s.row_start,
                    s.row_start + s.row_len
                )));
            }
            if s.move_index >= self.moves.len() {
                return Err(Error::Plan(format!("segment references missing move {}", s.move_index)));
            }
            spans.push((s.row_start, s.row_start + s.row_len));
        }
        spans.sort_unstable();
        if spans.windows(2).any(|w| w[1].0 < w[0].1) {
            return Err(Error::Plan("overlapping segments".into()));
        }
        for m in &self.moves {
            if !m.angle_deg.is_finite() {
                return Err(Error::Plan("non-finite rotation".into()));
            }
        }
        Ok(())
    }

    fn span_key(&self) -> Vec<(usize, usize)> {
        let mut k: Vec<_> = self.segments.iter().map(|s| (s.row_start, s.row_len)).collect();
        k.sort_unstable();
        k
    }
}

/// Integer translation with zero fill.
pub fn shift_image<T: Real>(img: &Image2D<T>, dx: i32, dy: i32) -> Result<Image2D<T>> {
    let (h, w) = img.dims();
    if dx.unsigned_abs() as usize >= w.max(1) || dy.unsigned_abs() as usize >= h.max(1) {
        return Err(Error::InvalidParameter(format!("shift ({dx},{dy}) out of range for {h}x{w}")));
    }
    Ok(Image2D::from_fn(h, w, |r, c| {
        let sr = r as i64 - dy as i64;
        let sc = c as i64 - dx as i64;
        if sr < 0 || sc < 0 || sr >= h as i64 || sc >= w as i64 {
            T::zero()
        } else {
            img[(sr as usize, sc as usize)]
        }
    }))
}

/// Rotation about the image centre with bilinear interpolation; samples
/// falling outside the source footprint are zero.
pub fn rotate_image<T: Real>(img: &Image2D<T>, angle_deg: f64) -> Result<Image2D<T>> {
    if !angle_deg.is_finite() {
        return Err(Error::InvalidParameter("rotation angle must be finite".into()));
    }
    if angle_deg == 0.0 {
        return Ok(img.clone());
    }
    let (h, w) = img.dims();
    let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
    let (s, c) = angle_deg.to_radians().sin_cos();
    let eps = 1e-9;
    Ok(Image2D::from_fn(h, w, |r, col| {
        let (dy, dx) = (r as f64 - cy, col as f64 - cx);
        let sx = cx + c * dx + s * dy;
        let sy = cy - s * dx + c * dy;
        if sx < -eps || sy < -eps || sx > w as f64 - 1.0 + eps || sy > h as f64 - 1.0 + eps {
            return T::zero();
        }
        let sx = sx.clamp(0.0, w as f64 - 1.0);
        let sy = sy.clamp(0.0, h as f64 - 1.0);
        let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
        let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
        let v = img[(y0, x0)].as_f64() * (1.0 - fx) * (1.0 - fy)
            + img[(y0, x1)].as_f64() * fx * (1.0 - fy)
            + img[(y1, x0)].as_f64() * (1.0 - fx) * fy
            + img[(y1, x1)].as_f64() * fx * fy;
        T::lit(v)
    }))
}

pub fn apply_move<T: Real>(img: &Image2D<T>, m: &Move) -> Result<Image2D<T>> {
    rotate_image(&shift_image(img, m.dx, m.dy)?, m.angle_deg)
}

/// Original spectrum with the planned rows taken from the moved copies.
pub fn splice_spectrum<T: Real>(orig: &Image2D<T>, plan: &MotionPlan) -> Result<Spectrum2D<T>> {
    let (h, w) = orig.dims();
    plan.validate(h)?;
    let mut spec = fft2_ortho(orig);
    let mut moved: Vec<Option<Spectrum2D<T>>> = vec![None; plan.moves.len()];
    for seg in &plan.segments {
        if moved[seg.move_index].is_none() {
            moved[seg.move_index] = Some(fft2_ortho(&apply_move(orig, &plan.moves[seg.move_index])?));
        }
        let src = moved[seg.move_index].as_ref().expect("computed above");
        let range = seg.row_start * w..(seg.row_start + seg.row_len) * w;
        spec.data_mut()[range.clone()].copy_from_slice(&src.data()[range]);
    }
    debug_assert_eq!(spec.layout(), Layout::Standard);
    Ok(spec)
}

/// Spliced image before clamping.
pub fn splice_kspace_unclamped<T: Real>(orig: &Image2D<T>, plan: &MotionPlan) -> Result<Image2D<T>> {
    Ok(ifft2_ortho(&splice_spectrum(orig, plan)?)?.image)
}

/// Motion-corrupted image, clamped to [0, 1].
pub fn splice_kspace<T: Real>(orig: &Image2D<T>, plan: &MotionPlan) -> Result<Image2D<T>> {
    if plan.segments.is_empty() {
        plan.validate(orig.height())?;
        return Ok(orig.clone());
    }
    Ok(splice_kspace_unclamped(orig, plan)?.clamp_unit())
}

/// Sampler settings for [`gen_motion_set`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionSynthesis {
    pub variants: usize,
    /// Inclusive range of the replaced-row fraction.
    pub severity: (f64, f64),
    /// Low-frequency rows that are never replaced.
    pub protect_center: usize,
    pub max_moves: usize,
    pub max_segments: usize,
    pub max_shift: i32,
    pub max_angle_deg: f64,
}

impl Default for MotionSynthesis {
    fn default() -> Self {
        Self {
            variants: 5,
            severity: (0.05, 0.35),
            protect_center: 8,
            max_moves: 4,
            max_segments: 6,
            max_shift: 8,
            max_angle_deg: 5.0,
        }
    }
}

impl MotionSynthesis {
    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.severity;
        if self.variants == 0 {
            return Err(Error::InvalidParameter("need at least one variant".into()));
        }
        if !(lo > 0.0 && lo <= hi && hi < 1.0) {
            return Err(Error::InvalidParameter(format!("severity range {lo}..{hi} outside (0, 1)")));
        }
        if self.max_moves == 0 || self.max_segments == 0 || self.max_shift < 1 || !(self.max_angle_deg >= 0.0) {
            return Err(Error::InvalidParameter("degenerate motion sampler bounds".into()));
        }
        Ok(())
    }

    /// Rows that may be replaced: everything except the protected band
    /// around DC (which wraps around row 0 in standard layout).
    pub fn replaceable_rows(&self, height: usize) -> std::ops::Range<usize> {
        let lo = self.protect_center.div_ceil(2);
        let hi = height.saturating_sub(self.protect_center / 2);
        lo..hi.max(lo)
    }

    /// Number of replaced rows for severity `s`: ⌊s·height⌋.
    pub fn rows_for(&self, severity: f64, height: usize) -> Result<usize> {
        let rows = (severity * height as f64).floor() as usize;
        let pool = self.replaceable_rows(height).len();
        if rows == 0 || rows > pool {
            return Err(Error::InvalidParameter(format!(
                "severity {severity} needs {rows} rows but {pool} are replaceable"
            )));
        }
        Ok(rows)
    }
}

/// `k` positive integers summing to `total`, uniformly over compositions.
fn random_composition<R: Rng>(r: &mut R, total: usize, k: usize) -> Vec<usize> {
    let cuts = rand::seq::index::sample(r, total - 1, k - 1);
    let mut cuts: Vec<usize> = cuts.into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    let mut parts = Vec::with_capacity(k);
    let mut prev = 0;
    for c in cuts {
        parts.push(c - prev);
        prev = c;
    }
    parts.push(total - prev);
    parts
}

fn sample_move<R: Rng>(r: &mut R, cfg: &MotionSynthesis) -> Move {
    let shift = |r: &mut R| {
        let mag = r.gen_range(1..=cfg.max_shift);
        if r.gen_bool(0.5) {
            mag
        } else {
            -mag
        }
    };
    let mut mv = Move {
        dx: 0,
        dy: 0,
        angle_deg: 0.0,
    };
    let (with_shift, with_rotation) = match r.gen_range(0..3) {
        0 => (true, false),
        1 => (false, true),
        _ => (true, true),
    };
    if with_shift {
        match r.gen_range(0..3) {
            0 => mv.dx = shift(r),
            1 => mv.dy = shift(r),
            _ => {
                mv.dx = shift(r);
                mv.dy = shift(r);
            }
        }
    }
    if with_rotation {
        mv.angle_deg = r.gen_range(0.0..=cfg.max_angle_deg);
    }
    mv
}

fn sample_plan<R: Rng>(r: &mut R, height: usize, cfg: &MotionSynthesis) -> Result<MotionPlan> {
    let (lo, hi) = cfg.severity;
    let severity = if lo == hi { lo } else { r.gen_range(lo..=hi) };
    let rows = cfg.rows_for(severity, height)?;
    let pool = cfg.replaceable_rows(height);
    let n_moves = r.gen_range(1..=cfg.max_moves);
    let moves: Vec<Move> = (0..n_moves).map(|_| sample_move(r, cfg)).collect();
    let k = r.gen_range(1..=cfg.max_segments.min(rows));
    let lengths = random_composition(r, rows, k);
    // Free rows split into k + 1 gaps.
    let free = pool.len() - rows;
    let mut marks: Vec<usize> = (0..k).map(|_| r.gen_range(0..=free)).collect();
    marks.sort_unstable();
    let mut segments = Vec::with_capacity(k);
    let mut cursor = pool.start;
    let mut prev_mark = 0;
    for (len, mark) in lengths.into_iter().zip(marks) {
        cursor += mark - prev_mark;
        prev_mark = mark;
        segments.push(Segment {
            row_start: cursor,
            row_len: len,
            move_index: r.gen_range(0..n_moves),
        });
        cursor += len;
    }
    MotionPlan::new(moves, segments, height)
}

/// `cfg.variants` motion-corrupted copies of `img`, each with its own plan.
/// Variant `i` draws from the stream `(seed, i)`; plans whose segment sets
/// collide with an earlier variant are redrawn.
pub fn gen_motion_set<T: Real>(img: &Image2D<T>, cfg: &MotionSynthesis, seed: u64) -> Result<Vec<(Image2D<T>, MotionPlan)>> {
    cfg.validate()?;
    let height = img.height();
    let mut plans: Vec<MotionPlan> = Vec::with_capacity(cfg.variants);
    for variant in 0..cfg.variants {
        let mut attempt = 0u64;
        let plan = loop {
            let mut r = rng::stream(seed, &[rng::label("motion-plan"), variant as u64, attempt]);
            let plan = sample_plan(&mut r, height, cfg)?;
            if plans.iter().all(|p| p.span_key() != plan.span_key()) {
                break plan;
            }
            attempt += 1;
            if attempt > 1000 {
                return Err(Error::InvalidParameter("cannot draw distinct motion plans".into()));
            }
        };
        plans.push(plan);
    }
    plans
        .into_iter()
        .map(|plan| Ok((splice_kspace(img, &plan)?, plan)))
        .collect()
}

/// One line of the plan sidecar written next to a motion manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub pair_id: String,
    pub plan: MotionPlan,
}

pub const PLAN_SIDECAR: &str = "motion_plans.tsv";

/// `pair_id \t severity \t plan-json` per line.
pub fn write_plan_sidecar(records: &[PlanRecord], path: &Path) -> Result<()> {
    let mut s = String::new();
    for r in records {
        let json = serde_json::to_string(&r.plan).expect("plan serializes");
        s.push_str(&format!("{}\t{:.6}\t{}\n", r.pair_id, r.plan.severity, json));
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_plan_sidecar(path: &Path) -> Result<Vec<PlanRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let mut parts = line.splitn(3, '\t');
            let pair_id = parts.next().unwrap_or_default().to_string();
            let _severity = parts.next();
            let json = parts
                .next()
                .ok_or_else(|| Error::Manifest(format!("bad plan line {line:?}")))?;
            let plan = serde_json::from_str(json).map_err(|e| Error::Manifest(format!("plan json: {e}")))?;
            Ok(PlanRecord { pair_id, plan })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarDatasetOptions {
    pub roi: usize,
    pub synthesis: MotionSynthesis,
}

impl Default for MarDatasetOptions {
    fn default() -> Self {
        Self {
            roi: 256,
            synthesis: MotionSynthesis::default(),
        }
    }
}

/// Builds the motion-artifact corpus: every slice (all roles) yields
/// `variants` MA images paired with its ground truth. Writes `gt/`, `ma/`,
/// `manifest.tsv` and the plan sidecar under `out_dir`.
pub fn build_mar_dataset<T: Real>(
    volumes: &[SubjectVolume<T>],
    split: SplitCounts,
    seed: u64,
    options: &MarDatasetOptions,
    out_dir: &Path,
) -> Result<(Manifest, Vec<PlanRecord>)> {
    let ids: Vec<String> = volumes.iter().map(|v| v.id.clone()).collect();
    let roles = split_subjects(&ids, split, seed)?;
    for sub in ["gt", "ma"] {
        let d = out_dir.join(sub);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    let jobs: Vec<(usize, usize, Role)> = volumes
        .iter()
        .enumerate()
        .zip(&roles)
        .flat_map(|((vi, v), &role)| (0..v.slices.len()).map(move |si| (vi, si, role)))
        .collect();
    let per_slice = jobs
        .par_iter()
        .map(|&(vi, si, role)| -> Result<Vec<(ManifestRecord, PlanRecord)>> {
            let subject = &volumes[vi].id;
            let gt = normalize_unit(&crop_roi(&volumes[vi].slices[si], options.roi)?)?;
            let gt_rel = PathBuf::from("gt").join(format!("{subject}_z{si:03}.mrir"));
            write_image_as(&gt, out_dir.join(&gt_rel), Dtype::F32)?;
            let stream = rng::stream_seed(seed, &[rng::label(subject), si as u64]);
            let set = gen_motion_set(&gt, &options.synthesis, stream)?;
            set.into_iter()
                .enumerate()
                .map(|(v, (ma, plan))| {
                    let pair_id = format!("{subject}_z{si:03}_v{v}");
                    let ma_rel = PathBuf::from("ma").join(format!("{pair_id}.mrir"));
                    write_image_as(&ma, out_dir.join(&ma_rel), Dtype::F32)?;
                    Ok((
                        ManifestRecord {
                            pair_id: pair_id.clone(),
                            subject_id: subject.clone(),
                            role,
                            lq_path: ma_rel,
                            hq_path: gt_rel.clone(),
                            augmentation: Augmentation::None,
                        },
                        PlanRecord { pair_id, plan },
                    ))
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let (records, plans): (Vec<_>, Vec<_>) = per_slice.into_iter().flatten().unzip();
    let manifest = Manifest::new(records)?;
    manifest.write(out_dir.join("manifest.tsv"))?;
    write_plan_sidecar(&plans, &out_dir.join(PLAN_SIDECAR))?;
    Ok((manifest, plans))
}
