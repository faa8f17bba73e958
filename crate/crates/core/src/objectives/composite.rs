//! Weighted sum of the pixel, SSIM, k-space and gradient-map terms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{charbonnier_grad, kspace_mse_grad, loss_grad_l1_grad, loss_ssim_l1_grad, pixel_l1_grad};
use crate::error::{Error, Result};
use crate::imgcore::Image2D;
use crate::kspace::default_mask_sigma;
use crate::scalar::Real;

/// The four loss configurations of the ablation study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LossPreset {
    /// Exact pixel-wise L1.
    R1,
    /// Charbonnier only.
    R2,
    /// Charbonnier + SSIM + k-space + gradient map.
    R3,
    /// As R3 with the masked k-space term and amplified gradient maps.
    R4,
}

impl LossPreset {
    pub const ALL: [LossPreset; 4] = [LossPreset::R1, LossPreset::R2, LossPreset::R3, LossPreset::R4];
}

impl fmt::Display for LossPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for LossPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "R1" => Ok(Self::R1),
            "R2" => Ok(Self::R2),
            "R3" => Ok(Self::R3),
            "R4" => Ok(Self::R4),
            other => Err(Error::InvalidParameter(format!("unknown loss preset {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub w_charbonnier: f64,
    pub w_ssim: f64,
    pub w_kspace: f64,
    pub w_grad: f64,
    pub kspace_masked: bool,
    pub grad_amplified: bool,
    /// Replace Charbonnier by exact mean |x − y| in the pixel term.
    pub pixel_l1: bool,
    pub charbonnier_eps: f64,
    pub grad_a: f64,
    /// `None` scales the default σ = 32 by image size / 256.
    pub mask_sigma: Option<f64>,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self::preset(LossPreset::R4)
    }
}

impl LossWeights {
    pub fn preset(preset: LossPreset) -> Self {
        let all = Self {
            w_charbonnier: 1.0,
            w_ssim: 0.1,
            w_kspace: 0.05,
            w_grad: 0.1,
            kspace_masked: false,
            grad_amplified: false,
            pixel_l1: false,
            charbonnier_eps: 1e-3,
            grad_a: 2.5,
            mask_sigma: None,
        };
        let pixel_only = Self {
            w_ssim: 0.0,
            w_kspace: 0.0,
            w_grad: 0.0,
            ..all.clone()
        };
        match preset {
            LossPreset::R1 => Self {
                pixel_l1: true,
                ..pixel_only
            },
            LossPreset::R2 => pixel_only,
            LossPreset::R3 => all,
            LossPreset::R4 => Self {
                kspace_masked: true,
                grad_amplified: true,
                ..all
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ws = [self.w_charbonnier, self.w_ssim, self.w_kspace, self.w_grad];
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter("loss weights must be finite and non-negative".into()));
        }
        if ws.iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidParameter("at least one loss weight must be positive".into()));
        }
        if !(self.grad_a > 0.0) || !self.grad_a.is_finite() {
            return Err(Error::InvalidParameter("grad_a must be positive".into()));
        }
        if !(self.charbonnier_eps >= 0.0) || !self.charbonnier_eps.is_finite() {
            return Err(Error::InvalidParameter("charbonnier_eps must be non-negative".into()));
        }
        if let Some(s) = self.mask_sigma {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidParameter("mask_sigma must be positive".into()));
            }
        }
        Ok(())
    }

    /// σ used for an image of the given size.
    pub fn sigma_for(&self, height: usize, width: usize) -> f64 {
        self.mask_sigma.unwrap_or_else(|| default_mask_sigma(height.min(width)))
    }
}

/// Unweighted term values; a term is `None` when its weight is zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown<T> {
    pub total: T,
    pub pixel: Option<T>,
    pub ssim: Option<T>,
    pub kspace: Option<T>,
    pub grad: Option<T>,
}

impl<T: Real> LossBreakdown<T> {
    pub fn cast<U: Real>(&self) -> LossBreakdown<U> {
        let c = |v: Option<T>| v.map(|v| U::lit(v.as_f64()));
        LossBreakdown {
            total: U::lit(self.total.as_f64()),
            pixel: c(self.pixel),
            ssim: c(self.ssim),
            kspace: c(self.kspace),
            grad: c(self.grad),
        }
    }
}

pub fn composite_loss<T: Real>(x: &Image2D<T>, y: &Image2D<T>, w: &LossWeights) -> Result<LossBreakdown<T>> {
    Ok(composite_loss_grad(x, y, w, false)?.0)
}

/// Composite value and, when requested, its gradient with respect to `x`.
pub fn composite_loss_grad<T: Real>(
    x: &Image2D<T>,
    y: &Image2D<T>,
    w: &LossWeights,
    want_grad: bool,
) -> Result<(LossBreakdown<T>, Option<Image2D<T>>)> {
    w.validate()?;
    x.ensure_same_dims(y)?;
    let (h, wd) = x.dims();
    let mut out = LossBreakdown {
        total: T::zero(),
        ..Default::default()
    };
    let mut grad = want_grad.then(|| Image2D::zeros(h, wd));
    let mut add = |weight: f64, (value, g): (T, Option<Image2D<T>>)| -> T {
        let wt = T::lit(weight);
        out.total = out.total + wt * value;
        if let (Some(acc), Some(g)) = (grad.as_mut(), g) {
            for (a, &b) in acc.data_mut().iter_mut().zip(g.data()) {
                *a = *a + wt * b;
            }
        }
        value
    };
    if w.w_charbonnier > 0.0 {
        let term = if w.pixel_l1 {
            pixel_l1_grad(x, y, want_grad)?
        } else {
            charbonnier_grad(x, y, T::lit(w.charbonnier_eps), want_grad)?
        };
        out.pixel = Some(add(w.w_charbonnier, term));
    }
    if w.w_ssim > 0.0 {
        out.ssim = Some(add(w.w_ssim, loss_ssim_l1_grad(x, y, want_grad)?));
    }
    if w.w_kspace > 0.0 {
        let term = kspace_mse_grad(x, y, w.kspace_masked, w.sigma_for(h, wd), want_grad)?;
        out.kspace = Some(add(w.w_kspace, term));
    }
    if w.w_grad > 0.0 {
        let term = loss_grad_l1_grad(x, y, w.grad_amplified, T::lit(w.grad_a), want_grad)?;
        out.grad = Some(add(w.w_grad, term));
    }
    Ok((out, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn pair(seed: u64, n: usize) -> (Image2D<f64>, Image2D<f64>) {
        let mut rng = crate::rng::stream(seed, &[]);
        let x = Image2D::<f64>::from_fn(n, n, |_, _| rng.gen_range(0.0..1.0));
        let y = x.map(|v| (v + 0.1 * (v * 17.0).sin()).clamp(0.0, 1.0));
        (x, y)
    }

    #[test]
    fn preset_parsing() {
        for p in LossPreset::ALL {
            assert_eq!(p.to_string().parse::<LossPreset>().unwrap(), p);
        }
        assert!("R5".parse::<LossPreset>().is_err());
    }

    #[test]
    fn equal_inputs_leave_only_eps_floor() {
        let (x, _) = pair(1, 16);
        for p in [LossPreset::R2, LossPreset::R3, LossPreset::R4] {
            let b = composite_loss(&x, &x, &LossWeights::preset(p)).unwrap();
            assert!((b.total - 1e-3).abs() < 1e-15, "{p}");
        }
        assert_eq!(composite_loss(&x, &x, &LossWeights::preset(LossPreset::R1)).unwrap().total, 0.0);
    }

    #[test]
    fn breakdown_sums_to_total() {
        let (x, y) = pair(2, 24);
        let w = LossWeights::preset(LossPreset::R4);
        let b = composite_loss(&x, &y, &w).unwrap();
        let sum = w.w_charbonnier * b.pixel.unwrap()
            + w.w_ssim * b.ssim.unwrap()
            + w.w_kspace * b.kspace.unwrap()
            + w.w_grad * b.grad.unwrap();
        assert!((b.total - sum).abs() < 1e-10);
    }

    #[test]
    fn r3_and_r4_share_pixel_and_ssim_terms() {
        let (x, y) = pair(3, 24);
        let a = composite_loss(&x, &y, &LossWeights::preset(LossPreset::R3)).unwrap();
        let b = composite_loss(&x, &y, &LossWeights::preset(LossPreset::R4)).unwrap();
        assert_eq!(a.pixel, b.pixel);
        assert_eq!(a.ssim, b.ssim);
        assert_ne!(a.kspace, b.kspace);
        assert_ne!(a.grad, b.grad);
    }

    #[test]
    fn pixel_only_presets() {
        let (x, y) = pair(4, 16);
        let r1 = composite_loss(&x, &y, &LossWeights::preset(LossPreset::R1)).unwrap();
        let r2 = composite_loss(&x, &y, &LossWeights::preset(LossPreset::R2)).unwrap();
        assert_eq!(r1.total, super::super::pixel_l1(&x, &y).unwrap());
        assert!(r1.ssim.is_none() && r2.kspace.is_none() && r2.grad.is_none());
        assert!(r2.total > r1.total);
    }

    #[test]
    fn invalid_weights() {
        let zero = LossWeights {
            w_charbonnier: 0.0,
            ..LossWeights::preset(LossPreset::R2)
        };
        assert!(zero.validate().is_err());
        let neg = LossWeights {
            w_ssim: -0.1,
            ..LossWeights::default()
        };
        assert!(neg.validate().is_err());
        let bad_a = LossWeights {
            grad_a: 0.0,
            ..LossWeights::default()
        };
        assert!(bad_a.validate().is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, y) = pair(5, 14);
        for p in LossPreset::ALL {
            let w = LossWeights::preset(p);
            let g = composite_loss_grad(&x, &y, &w, true).unwrap().1.unwrap();
            for i in (0..x.len()).step_by(5) {
                let h = 1e-6;
                let mut xp = x.clone();
                xp.data_mut()[i] += h;
                let mut xm = x.clone();
                xm.data_mut()[i] -= h;
                let fd = (composite_loss(&xp, &y, &w).unwrap().total - composite_loss(&xm, &y, &w).unwrap().total) / (2.0 * h);
                assert!((fd - g.data()[i]).abs() < 1e-6, "{p} {i}: {fd} vs {}", g.data()[i]);
            }
        }
    }
}
