//! Low-resolution synthesis by k-space truncation, patching and augmentation.

mod dataset;
mod manifest;

pub use dataset::{build_sr_dataset, list_subject_dirs, load_subject, NormalizationMode, SrDatasetOptions, SrPairSpec, SubjectVolume};
pub use manifest::{Augmentation, Manifest, ManifestRecord, Role};

use crate::error::{Error, Result};
use crate::imgcore::{normalize_unit, Image2D};
use crate::kspace::{crop_center, fft2_ortho, ifft2_ortho, pad_center, shift_center, unshift_center};
use crate::scalar::Real;

fn check_factor(h: usize, w: usize, factor: usize) -> Result<()> {
    if factor == 0 {
        return Err(Error::InvalidParameter("factor must be >= 1".into()));
    }
    if h % (2 * factor) != 0 || w % (2 * factor) != 0 {
        return Err(Error::Dimension(format!(
            "{h}x{w} is not divisible by 2*factor = {}",
            2 * factor
        )));
    }
    Ok(())
}

/// Keeps the central 1/factor of k-space and returns the real image before
/// intensity normalization.
pub fn fourier_downsample_raw<T: Real>(img: &Image2D<T>, factor: usize) -> Result<Image2D<T>> {
    let (h, w) = img.dims();
    check_factor(h, w, factor)?;
    let centered = shift_center(&fft2_ortho(img))?;
    let block = crop_center(&centered, h / factor, w / factor)?;
    Ok(ifft2_ortho(&unshift_center(&block)?)?.image)
}

/// Fourier downsampling followed by unit normalization.
pub fn fourier_downsample<T: Real>(img: &Image2D<T>, factor: usize) -> Result<Image2D<T>> {
    normalize_unit(&fourier_downsample_raw(img, factor)?)
}

/// Zero-filled k-space upsampling (sinc interpolation), real part, no
/// normalization.
pub fn fourier_upsample<T: Real>(img: &Image2D<T>, factor: usize) -> Result<Image2D<T>> {
    let (h, w) = img.dims();
    if factor == 0 || h % 2 != 0 || w % 2 != 0 {
        return Err(Error::Dimension(format!("cannot upsample {h}x{w} by {factor}")));
    }
    let centered = shift_center(&fft2_ortho(img))?;
    let padded = pad_center(&centered, h * factor, w * factor)?;
    Ok(ifft2_ortho(&unshift_center(&padded)?)?.image)
}

/// Centred `out×out` region of interest.
pub fn crop_roi<T: Real>(img: &Image2D<T>, out: usize) -> Result<Image2D<T>> {
    let (h, w) = img.dims();
    if h < out || w < out {
        return Err(Error::Dimension(format!("{h}x{w} is smaller than ROI {out}")));
    }
    img.crop((h - out) / 2, (w - out) / 2, out, out)
}

/// One patch cut from a larger image, with its top-left offset.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch<T> {
    pub image: Image2D<T>,
    pub row: usize,
    pub col: usize,
}

fn grid_positions(dim: usize, patch: usize, stride: usize) -> Result<Vec<usize>> {
    if patch == 0 || stride == 0 || patch > dim {
        return Err(Error::Dimension(format!("patch {patch} stride {stride} on dimension {dim}")));
    }
    if (dim - patch) % stride != 0 {
        return Err(Error::Dimension(format!(
            "({dim} - {patch}) is not divisible by stride {stride}"
        )));
    }
    Ok((0..=(dim - patch) / stride).map(|i| i * stride).collect())
}

/// Row-major grid of `patch×patch` tiles at the given stride.
pub fn extract_patches<T: Real>(img: &Image2D<T>, patch: usize, stride: usize) -> Result<Vec<Patch<T>>> {
    let rows = grid_positions(img.height(), patch, stride)?;
    let cols = grid_positions(img.width(), patch, stride)?;
    let mut out = Vec::with_capacity(rows.len() * cols.len());
    for &row in &rows {
        for &col in &cols {
            out.push(Patch {
                image: img.crop(row, col, patch, patch)?,
                row,
                col,
            });
        }
    }
    Ok(out)
}

/// Quarter-turn: `out(c, n-1-r) = in(r, c)`, so (0, 0) goes to (0, n-1).
pub fn rot90<T: Real>(img: &Image2D<T>) -> Result<Image2D<T>> {
    let n = img.height();
    if img.width() != n {
        return Err(Error::Dimension(format!("rotation needs a square patch, got {:?}", img.dims())));
    }
    let mut out = Image2D::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            out[(c, n - 1 - r)] = img[(r, c)];
        }
    }
    Ok(out)
}

pub fn rotate_quarters<T: Real>(img: &Image2D<T>, quarters: usize) -> Result<Image2D<T>> {
    let mut out = img.clone();
    if img.width() != img.height() {
        return Err(Error::Dimension("rotation needs a square patch".into()));
    }
    for _ in 0..quarters % 4 {
        out = rot90(&out)?;
    }
    Ok(out)
}

/// `[identity, rot90, rot180, rot270]`.
pub fn augment_rot<T: Real>(patch: &Image2D<T>) -> Result<[Image2D<T>; 4]> {
    let r1 = rot90(patch)?;
    let r2 = rot90(&r1)?;
    let r3 = rot90(&r2)?;
    Ok([patch.clone(), r1, r2, r3])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn factor_one_is_identity_up_to_normalization() {
        let img = Image2D::<f64>::from_fn(16, 16, |r, c| ((r * 7 + c * 3) % 11) as f64 / 10.0);
        let out = fourier_downsample(&img, 1).unwrap();
        let want = normalize_unit(&img).unwrap();
        for (a, b) in out.data().iter().zip(want.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_downsamples_to_zeros() {
        let out = fourier_downsample(&Image2D::<f64>::filled(256, 256, 0.3), 2).unwrap();
        assert_eq!(out.dims(), (128, 128));
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn band_limited_cosine_downsamples_exactly() {
        let img = Image2D::<f64>::from_fn(256, 256, |r, c| (2.0 * PI * (r as f64 - c as f64) / 32.0).cos());
        let out = fourier_downsample_raw(&img, 2).unwrap();
        let want = Image2D::<f64>::from_fn(128, 128, |r, c| (2.0 * PI * (r as f64 - c as f64) / 16.0).cos());
        for (a, b) in out.data().iter().zip(want.data()) {
            assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn downsample_support_is_the_retained_block() {
        let img = Image2D::<f64>::from_fn(32, 32, |r, c| ((r * 13 + c * 5) % 17) as f64);
        let lr = fourier_downsample_raw(&img, 2).unwrap();
        assert_eq!(lr.dims(), (16, 16));
        let up = shift_center(&fft2_ortho(&fourier_upsample(&lr, 2).unwrap())).unwrap();
        for r in 0..32 {
            for c in 0..32 {
                // taking the real part mirrors the block's Nyquist edge onto index 24
                let inside = (8..=24).contains(&r) && (8..=24).contains(&c);
                if !inside {
                    assert!(up.get(r, c).norm() < 1e-10, "({r},{c})");
                }
            }
        }
    }

    #[test]
    fn odd_sizes_are_rejected() {
        assert!(fourier_downsample(&Image2D::<f64>::zeros(30, 32), 4).is_err());
        assert!(fourier_downsample(&Image2D::<f64>::zeros(33, 32), 1).is_err());
    }

    #[test]
    fn roi_crop_is_centred() {
        let mut img = Image2D::<f64>::zeros(384, 300);
        img[(192, 150)] = 1.0;
        let roi = crop_roi(&img, 256).unwrap();
        assert_eq!(roi.dims(), (256, 256));
        assert_eq!(roi[(128, 128)], 1.0);
        let square = Image2D::<f64>::from_fn(256, 256, |r, c| (r + c) as f64);
        assert_eq!(crop_roi(&square, 256).unwrap(), square);
        assert!(crop_roi(&square, 300).is_err());
    }

    #[test]
    fn patch_grid_counts_and_offsets() {
        let big = Image2D::<f64>::zeros(256, 256);
        assert_eq!(extract_patches(&big, 128, 64).unwrap().len(), 9);
        let one = extract_patches(&big, 256, 64).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!((one[0].row, one[0].col), (0, 0));
        let small = Image2D::<f64>::from_fn(64, 64, |r, c| (r * 64 + c) as f64);
        let p = extract_patches(&small, 32, 16).unwrap();
        let offsets: Vec<_> = p.iter().map(|p| (p.row, p.col)).collect();
        let mut want = Vec::new();
        for r in [0, 16, 32] {
            for c in [0, 16, 32] {
                want.push((r, c));
            }
        }
        assert_eq!(offsets, want);
        assert_eq!(p[4].image[(0, 0)], small[(16, 16)]);
        assert!(extract_patches(&small, 32, 12).is_err());
    }

    #[test]
    fn rotation_group() {
        let img = Image2D::<f64>::from_fn(4, 4, |r, c| (r * 4 + c) as f64);
        let r1 = rot90(&img).unwrap();
        assert_eq!(r1[(0, 3)], img[(0, 0)]);
        let [id, a, b, c] = augment_rot(&img).unwrap();
        assert_eq!(id, img);
        assert_eq!(a, r1);
        assert_eq!(b, rot90(&rot90(&img).unwrap()).unwrap());
        assert_eq!(rot90(&c).unwrap(), img);
        assert!(rot90(&Image2D::<f64>::zeros(3, 4)).is_err());
    }
}
