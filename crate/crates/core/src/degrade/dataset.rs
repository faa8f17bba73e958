use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::{Augmentation, Manifest, ManifestRecord, Role};
use super::{crop_roi, extract_patches, fourier_downsample_raw, rotate_quarters};
use crate::error::{Error, Result};
use crate::imgcore::{normalize_unit, read_image, write_image_as, Dtype, Image2D};
use crate::scalar::Real;
use crate::trainer::{split_subjects, SplitCounts};

/// Patch geometry of a super-resolution pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrPairSpec {
    pub sr_factor: usize,
    pub hr_patch: usize,
    pub hr_stride: usize,
    pub lr_patch: usize,
    pub lr_stride: usize,
}

impl SrPairSpec {
    pub fn new(sr_factor: usize, hr_patch: usize, hr_stride: usize) -> Result<Self> {
        if !matches!(sr_factor, 2 | 4) {
            return Err(Error::InvalidParameter(format!("sr_factor must be 2 or 4, got {sr_factor}")));
        }
        if hr_patch % sr_factor != 0 || hr_stride % sr_factor != 0 || hr_patch == 0 || hr_stride == 0 {
            return Err(Error::InvalidParameter(format!(
                "patch {hr_patch} / stride {hr_stride} not divisible by factor {sr_factor}"
            )));
        }
        Ok(Self {
            sr_factor,
            hr_patch,
            hr_stride,
            lr_patch: hr_patch / sr_factor,
            lr_stride: hr_stride / sr_factor,
        })
    }

    /// 128×128 high-resolution patches with stride 64.
    pub fn clinical(sr_factor: usize) -> Result<Self> {
        Self::new(sr_factor, 128, 64)
    }
}

/// How the low-resolution image is scaled to [0, 1].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormalizationMode {
    /// LR and HR each get their own min/max.
    #[default]
    Independent,
    /// LR reuses the HR affine map, then clamps.
    Shared,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SrDatasetOptions {
    pub roi: usize,
    pub normalization: NormalizationMode,
}

impl Default for SrDatasetOptions {
    fn default() -> Self {
        Self {
            roi: 256,
            normalization: NormalizationMode::Independent,
        }
    }
}

/// Slices of one subject, in acquisition order.
#[derive(Clone, Debug)]
pub struct SubjectVolume<T> {
    pub id: String,
    pub slices: Vec<Image2D<T>>,
}

/// Subdirectories of `root`, sorted by name.
pub fn list_subject_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    Ok(dirs)
}

/// Reads every `*.mrir` in `dir` (sorted) as one subject.
pub fn load_subject<T: Real>(dir: &Path) -> Result<SubjectVolume<T>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "mrir"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidParameter(format!("{} holds no .mrir slices", dir.display())));
    }
    let slices = files.iter().map(read_image).collect::<Result<Vec<_>>>()?;
    let id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "subject".into());
    Ok(SubjectVolume { id, slices })
}

struct SliceJob<'a, T> {
    subject: &'a str,
    role: Role,
    slice_index: usize,
    image: &'a Image2D<T>,
}

fn process_slice<T: Real>(
    job: &SliceJob<'_, T>,
    spec: &SrPairSpec,
    options: &SrDatasetOptions,
    out_dir: &Path,
) -> Result<Vec<ManifestRecord>> {
    let roi = crop_roi(job.image, options.roi)?;
    let hr = normalize_unit(&roi)?;
    let lr_raw = fourier_downsample_raw(&roi, spec.sr_factor)?;
    let lr = match options.normalization {
        NormalizationMode::Independent => normalize_unit(&lr_raw)?,
        NormalizationMode::Shared => {
            let (lo, hi) = roi.min_max().expect("non-empty roi");
            let range = if hi > lo { hi - lo } else { T::one() };
            lr_raw.map(|v| ((v - lo) / range).max(T::zero()).min(T::one()))
        }
    };
    let hr_patches = extract_patches(&hr, spec.hr_patch, spec.hr_stride)?;
    let lr_patches = extract_patches(&lr, spec.lr_patch, spec.lr_stride)?;
    debug_assert_eq!(hr_patches.len(), lr_patches.len());
    let augs: &[Augmentation] = if job.role == Role::Train {
        &Augmentation::ALL
    } else {
        &[Augmentation::None]
    };
    let mut records = Vec::with_capacity(hr_patches.len() * augs.len());
    for (p, (hp, lp)) in hr_patches.iter().zip(&lr_patches).enumerate() {
        for &aug in augs {
            let pair_id = format!("{}_z{:03}_p{:03}_{}", job.subject, job.slice_index, p, aug);
            let lq_rel = PathBuf::from("lq").join(format!("{pair_id}.mrir"));
            let hq_rel = PathBuf::from("hq").join(format!("{pair_id}.mrir"));
            write_image_as(&rotate_quarters(&lp.image, aug.quarters())?, out_dir.join(&lq_rel), Dtype::F32)?;
            write_image_as(&rotate_quarters(&hp.image, aug.quarters())?, out_dir.join(&hq_rel), Dtype::F32)?;
            records.push(ManifestRecord {
                pair_id,
                subject_id: job.subject.to_string(),
                role: job.role,
                lq_path: lq_rel,
                hq_path: hq_rel,
                augmentation: aug,
            });
        }
    }
    Ok(records)
}

/// Builds the super-resolution training corpus: subject-level split, ROI
/// crop, Fourier downsampling, patching, training-only rotation
/// augmentation. Writes `lq/`, `hq/` and `manifest.tsv` under `out_dir`.
pub fn build_sr_dataset<T: Real>(
    volumes: &[SubjectVolume<T>],
    spec: &SrPairSpec,
    split: SplitCounts,
    seed: u64,
    options: &SrDatasetOptions,
    out_dir: &Path,
) -> Result<Manifest> {
    let ids: Vec<String> = volumes.iter().map(|v| v.id.clone()).collect();
    let roles = split_subjects(&ids, split, seed)?;
    for sub in ["lq", "hq"] {
        let d = out_dir.join(sub);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    let jobs: Vec<SliceJob<'_, T>> = volumes
        .iter()
        .zip(&roles)
        .flat_map(|(v, &role)| {
            v.slices.iter().enumerate().map(move |(i, image)| SliceJob {
                subject: &v.id,
                role,
                slice_index: i,
                image,
            })
        })
        .collect();
    let per_slice = jobs
        .par_iter()
        .map(|job| process_slice(job, spec, options, out_dir))
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest::new(per_slice.into_iter().flatten().collect())?;
    manifest.write(out_dir.join("manifest.tsv"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::{make_subject, PhantomSpec};

    fn volumes(n: usize, slices: usize, size: usize) -> Vec<SubjectVolume<f32>> {
        (0..n)
            .map(|i| SubjectVolume {
                id: format!("subj{i:02}"),
                slices: make_subject(
                    &PhantomSpec {
                        seed: i as u64,
                        size,
                        ..Default::default()
                    },
                    slices,
                )
                .unwrap(),
            })
            .collect()
    }

    #[test]
    fn pair_spec_derives_lr_geometry() {
        let s = SrPairSpec::clinical(2).unwrap();
        assert_eq!((s.lr_patch, s.lr_stride), (64, 32));
        let s = SrPairSpec::clinical(4).unwrap();
        assert_eq!((s.lr_patch, s.lr_stride), (32, 16));
        assert!(SrPairSpec::new(3, 128, 64).is_err());
        assert!(SrPairSpec::new(4, 130, 64).is_err());
    }

    #[test]
    fn single_training_slice_yields_thirty_six_records() {
        let dir = tempfile::tempdir().unwrap();
        let vols = volumes(1, 1, 256);
        let spec = SrPairSpec::clinical(2).unwrap();
        let m = build_sr_dataset(&vols, &spec, SplitCounts::new(1, 0, 0), 1, &SrDatasetOptions::default(), dir.path()).unwrap();
        assert_eq!(m.records.len(), 36);
        let rec = &m.records[5];
        let lq: Image2D<f32> = read_image(dir.path().join(&rec.lq_path)).unwrap();
        let hq: Image2D<f32> = read_image(dir.path().join(&rec.hq_path)).unwrap();
        assert_eq!((lq.dims(), hq.dims()), ((64, 64), (128, 128)));
        assert_eq!(Manifest::read(dir.path().join("manifest.tsv")).unwrap(), m);
    }

    #[test]
    fn split_roles_are_disjoint_and_sized() {
        let dir = tempfile::tempdir().unwrap();
        let vols = volumes(28, 1, 32);
        let spec = SrPairSpec::new(2, 32, 32).unwrap();
        let options = SrDatasetOptions {
            roi: 32,
            ..Default::default()
        };
        let m = build_sr_dataset(&vols, &spec, SplitCounts::new(21, 4, 3), 5, &options, dir.path()).unwrap();
        let train = m.subjects(Role::Train);
        let val = m.subjects(Role::Val);
        let test = m.subjects(Role::Test);
        assert_eq!((train.len(), val.len(), test.len()), (21, 4, 3));
        for s in &train {
            assert!(!val.contains(s) && !test.contains(s));
        }
        for s in &val {
            assert!(!test.contains(s));
        }
        // Only training patches are rotated.
        assert!(m.role(Role::Val).all(|r| r.augmentation == Augmentation::None));
        assert_eq!(m.role(Role::Train).count(), 21 * 4);
    }

    #[test]
    fn same_seed_gives_identical_manifest_bytes() {
        let vols = volumes(3, 2, 32);
        let spec = SrPairSpec::new(2, 16, 8).unwrap();
        let options = SrDatasetOptions {
            roi: 32,
            ..Default::default()
        };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        build_sr_dataset(&vols, &spec, SplitCounts::new(1, 1, 1), 9, &options, a.path()).unwrap();
        build_sr_dataset(&vols, &spec, SplitCounts::new(1, 1, 1), 9, &options, b.path()).unwrap();
        let ma = fs::read(a.path().join("manifest.tsv")).unwrap();
        let mb = fs::read(b.path().join("manifest.tsv")).unwrap();
        assert_eq!(ma, mb);
    }

    #[test]
    fn split_mismatch_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let vols = volumes(2, 1, 32);
        let spec = SrPairSpec::new(2, 32, 32).unwrap();
        assert!(build_sr_dataset(&vols, &spec, SplitCounts::new(1, 1, 1), 0, &SrDatasetOptions::default(), dir.path()).is_err());
    }

    #[test]
    fn shared_normalization_keeps_hr_scale() {
        let dir = tempfile::tempdir().unwrap();
        let vols = volumes(1, 1, 32);
        let spec = SrPairSpec::new(2, 32, 32).unwrap();
        let options = SrDatasetOptions {
            roi: 32,
            normalization: NormalizationMode::Shared,
        };
        let m = build_sr_dataset(&vols, &spec, SplitCounts::new(0, 0, 1), 0, &options, dir.path()).unwrap();
        let lq: Image2D<f32> = read_image(dir.path().join(&m.records[0].lq_path)).unwrap();
        let (lo, hi) = lq.min_max().unwrap();
        assert!(lo >= 0.0 && hi <= 1.0);
    }
}
