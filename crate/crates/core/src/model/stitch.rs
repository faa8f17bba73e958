use rayon::prelude::*;

use super::network::Model;
use crate::degrade::{extract_patches, Patch};
use crate::error::{Error, Result};
use crate::imgcore::Image2D;
use crate::scalar::Real;

/// Places each patch at `scale ×` its offset, averages overlaps with equal
/// weights and clamps to [0,1]. Every output pixel must be covered.
pub fn stitch_patches<T: Real>(patches: &[Patch<T>], height: usize, width: usize, scale: usize) -> Result<Image2D<T>> {
    let mut sum = vec![T::zero(); height * width];
    let mut count = vec![0u32; height * width];
    for p in patches {
        let (r0, c0) = (p.row * scale, p.col * scale);
        let (ph, pw) = p.image.dims();
        if r0 + ph > height || c0 + pw > width {
            return Err(Error::Stitch(format!(
                "{ph}x{pw} patch at ({r0},{c0}) exceeds {height}x{width}"
            )));
        }
        for r in 0..ph {
            let src = p.image.row(r);
            let base = (r0 + r) * width + c0;
            for (c, &v) in src.iter().enumerate() {
                sum[base + c] = sum[base + c] + v;
                count[base + c] += 1;
            }
        }
    }
    if let Some(gap) = count.iter().position(|&n| n == 0) {
        return Err(Error::Stitch(format!(
            "pixel ({}, {}) is not covered by any patch",
            gap / width,
            gap % width
        )));
    }
    let data = sum
        .iter()
        .zip(&count)
        .map(|(&s, &n)| (s / T::lit(n as f64)).max(T::zero()).min(T::one()))
        .collect();
    Image2D::new(height, width, data)
}

/// Restores `img` tile by tile (`patch`/`stride` in input pixels) and
/// stitches the outputs.
pub fn restore_tiled<T: Real>(model: &Model<T>, img: &Image2D<T>, patch: usize, stride: usize) -> Result<Image2D<T>> {
    let tiles = extract_patches(img, patch, stride)?;
    let restored: Vec<Patch<T>> = tiles
        .par_iter()
        .map(|t| {
            Ok(Patch {
                image: model.forward(&t.image)?,
                row: t.row,
                col: t.col,
            })
        })
        .collect::<Result<_>>()?;
    let (oh, ow) = model.config().output_dims(img.height(), img.width())?;
    let scale = oh / img.height();
    stitch_patches(&restored, oh, ow, scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_full_patch_is_identity() {
        let img = Image2D::<f64>::from_fn(6, 5, |r, c| (r * 5 + c) as f64 / 30.0);
        let p = [Patch {
            image: img.clone(),
            row: 0,
            col: 0,
        }];
        assert_eq!(stitch_patches(&p, 6, 5, 1).unwrap(), img);
    }

    #[test]
    fn overlapping_grid_restitches_exactly() {
        let img = Image2D::<f64>::from_fn(16, 16, |r, c| ((r * 7 + c * 3) % 11) as f64 / 10.0);
        let patches = extract_patches(&img, 8, 4).unwrap();
        assert_eq!(patches.len(), 9);
        assert_eq!(stitch_patches(&patches, 16, 16, 1).unwrap(), img);
    }

    #[test]
    fn overlap_is_averaged() {
        let a = Patch {
            image: Image2D::<f64>::filled(2, 4, 0.2),
            row: 0,
            col: 0,
        };
        let b = Patch {
            image: Image2D::<f64>::filled(2, 4, 0.4),
            row: 0,
            col: 1,
        };
        let out = stitch_patches(&[a, b], 2, 6, 2).unwrap();
        assert_eq!(out[(0, 0)], 0.2);
        assert!((out[(1, 3)] - 0.3).abs() < 1e-15);
        assert_eq!(out[(1, 5)], 0.4);
    }

    #[test]
    fn gaps_and_overruns_are_errors() {
        let p = Patch {
            image: Image2D::<f64>::filled(2, 2, 0.5),
            row: 0,
            col: 0,
        };
        assert!(matches!(stitch_patches(&[p.clone()], 3, 2, 1), Err(Error::Stitch(_))));
        let far = Patch { row: 1, ..p };
        assert!(matches!(stitch_patches(&[far], 2, 2, 1), Err(Error::Stitch(_))));
    }
}
