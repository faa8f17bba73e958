//! Orthonormal 2D Fourier transforms and k-space layout handling.
//!
//! Spectra carry a [`Layout`] tag. `fft2_ortho` produces `Standard` (DC at
//! index (0, 0)); in that arrangement the Nyquist bins already sit at the
//! array centre, so [`overturn`] is a pure re-tag. [`shift_center`] moves DC
//! to the centre for low-pass cropping.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::imgcore::Image2D;
use crate::scalar::Real;

/// Where DC lives in a spectrum array.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// DC at (0, 0), high frequencies at the centre.
    Standard,
    /// DC at (h/2, w/2).
    Centered,
    /// Standard arrangement read as "high frequencies central".
    Overturned,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum2D<T> {
    height: usize,
    width: usize,
    data: Vec<Complex<T>>,
    layout: Layout,
}

impl<T: Real> Spectrum2D<T> {
    pub fn new(height: usize, width: usize, data: Vec<Complex<T>>, layout: Layout) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::Dimension(format!(
                "{height}x{width} spectrum needs {} values, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
            layout,
        })
    }

    pub fn zeros(height: usize, width: usize, layout: Layout) -> Self {
        Self {
            height,
            width,
            data: vec![Complex::new(T::zero(), T::zero()); height * width],
            layout,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> Complex<T> {
        self.data[r * self.width + c]
    }

    /// Sum of squared magnitudes.
    pub fn energy(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    fn expect_layout(&self, expected: Layout) -> Result<()> {
        if self.layout != expected {
            return Err(Error::Layout {
                expected,
                found: self.layout,
            });
        }
        Ok(())
    }

    fn retag(mut self, layout: Layout) -> Self {
        self.layout = layout;
        self
    }
}

/// Signed frequency of bin `k` in a length-`n` standard-layout axis.
pub fn signed_freq(k: usize, n: usize) -> isize {
    if k < n.div_ceil(2) {
        k as isize
    } else {
        k as isize - n as isize
    }
}

fn transpose<T: Copy>(src: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(src.len());
    for c in 0..cols {
        for r in 0..rows {
            out.push(src[r * cols + c]);
        }
    }
    out
}

/// Unitary 2D DFT (forward or inverse) of row-major complex data, in place.
pub(crate) fn fft2_complex<T: Real>(data: &mut Vec<Complex<T>>, height: usize, width: usize, inverse: bool) {
    if data.is_empty() {
        return;
    }
    let mut planner = FftPlanner::<T>::new();
    let plan = |planner: &mut FftPlanner<T>, n| {
        if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        }
    };
    plan(&mut planner, width).process(data);
    let mut cols = transpose(data, height, width);
    plan(&mut planner, height).process(&mut cols);
    *data = transpose(&cols, width, height);
    let scale = T::one() / T::lit(((height * width) as f64).sqrt());
    for z in data.iter_mut() {
        *z = *z * scale;
    }
}

/// Orthonormal forward transform; the result is in `Standard` layout.
pub fn fft2_ortho<T: Real>(img: &Image2D<T>) -> Spectrum2D<T> {
    let (h, w) = img.dims();
    let mut data: Vec<Complex<T>> = img.data().iter().map(|&v| Complex::new(v, T::zero())).collect();
    fft2_complex(&mut data, h, w, false);
    Spectrum2D {
        height: h,
        width: w,
        data,
        layout: Layout::Standard,
    }
}

/// Real part of an inverse transform plus the largest discarded imaginary part.
#[derive(Clone, Debug)]
pub struct InverseTransform<T> {
    pub image: Image2D<T>,
    pub max_imag_residual: T,
}

pub fn ifft2_ortho<T: Real>(spec: &Spectrum2D<T>) -> Result<InverseTransform<T>> {
    spec.expect_layout(Layout::Standard)?;
    let mut data = spec.data.clone();
    fft2_complex(&mut data, spec.height, spec.width, true);
    let max_imag_residual = data.iter().fold(T::zero(), |m, z| m.max(z.im.abs()));
    let image = Image2D::new(spec.height, spec.width, data.into_iter().map(|z| z.re).collect())?;
    Ok(InverseTransform {
        image,
        max_imag_residual,
    })
}

fn roll<T: Copy>(spec_data: &[T], h: usize, w: usize, dr: usize, dc: usize) -> Vec<T> {
    let mut out = spec_data.to_vec();
    for r in 0..h {
        for c in 0..w {
            out[((r + dr) % h) * w + (c + dc) % w] = spec_data[r * w + c];
        }
    }
    out
}

/// Standard → Centered: DC moves to (h/2, w/2).
pub fn shift_center<T: Real>(spec: &Spectrum2D<T>) -> Result<Spectrum2D<T>> {
    spec.expect_layout(Layout::Standard)?;
    let (h, w) = (spec.height, spec.width);
    Ok(Spectrum2D {
        data: roll(&spec.data, h, w, h / 2, w / 2),
        layout: Layout::Centered,
        ..*spec
    })
}

/// Centered → Standard, the inverse of [`shift_center`] for any size.
pub fn unshift_center<T: Real>(spec: &Spectrum2D<T>) -> Result<Spectrum2D<T>> {
    spec.expect_layout(Layout::Centered)?;
    let (h, w) = (spec.height, spec.width);
    Ok(Spectrum2D {
        data: roll(&spec.data, h, w, h - h / 2, w - w / 2),
        layout: Layout::Standard,
        ..*spec
    })
}

/// Standard → Overturned. No data moves: the standard arrangement already
/// places the high frequencies at the array centre.
pub fn overturn<T: Real>(spec: &Spectrum2D<T>) -> Result<Spectrum2D<T>> {
    spec.expect_layout(Layout::Standard)?;
    Ok(spec.clone().retag(Layout::Overturned))
}

/// Overturned → Standard.
pub fn restore_standard<T: Real>(spec: &Spectrum2D<T>) -> Result<Spectrum2D<T>> {
    spec.expect_layout(Layout::Overturned)?;
    Ok(spec.clone().retag(Layout::Standard))
}

fn check_block(out_h: usize, out_w: usize, h: usize, w: usize) -> Result<()> {
    if out_h % 2 != 0 || out_w % 2 != 0 || out_h == 0 || out_w == 0 {
        return Err(Error::Dimension(format!("block {out_h}x{out_w} must be even and non-empty")));
    }
    if out_h > h || out_w > w {
        return Err(Error::Dimension(format!("block {out_h}x{out_w} exceeds {h}x{w}")));
    }
    Ok(())
}

/// Keeps the central `out_h×out_w` block of a centred spectrum, scaled by
/// √(out area / in area) so band-limited amplitudes survive the round trip.
pub fn crop_center<T: Real>(spec: &Spectrum2D<T>, out_h: usize, out_w: usize) -> Result<Spectrum2D<T>> {
    spec.expect_layout(Layout::Centered)?;
    let (h, w) = (spec.height, spec.width);
    check_block(out_h, out_w, h, w)?;
    let (r0, c0) = (h / 2 - out_h / 2, w / 2 - out_w / 2);
    let scale = T::lit(((out_h * out_w) as f64 / (h * w) as f64).sqrt());
    let mut data = Vec::with_capacity(out_h * out_w);
    for r in r0..r0 + out_h {
        data.extend(spec.data[r * w + c0..r * w + c0 + out_w].iter().map(|&z| z * scale));
    }
    Spectrum2D::new(out_h, out_w, data, Layout::Centered)
}

/// Zero-fills a centred spectrum out to `out_h×out_w`; inverse of [`crop_center`].
pub fn pad_center<T: Real>(spec: &Spectrum2D<T>, out_h: usize, out_w: usize) -> Result<Spectrum2D<T>> {
    spec.expect_layout(Layout::Centered)?;
    let (h, w) = (spec.height, spec.width);
    check_block(h, w, out_h, out_w)?;
    let (r0, c0) = (out_h / 2 - h / 2, out_w / 2 - w / 2);
    let scale = T::lit(((out_h * out_w) as f64 / (h * w) as f64).sqrt());
    let mut out = Spectrum2D::zeros(out_h, out_w, Layout::Centered);
    for r in 0..h {
        for c in 0..w {
            out.data[(r0 + r) * out_w + c0 + c] = spec.data[r * w + c] * scale;
        }
    }
    Ok(out)
}

/// Gaussian weights peaking at 1 on the array centre (h/2, w/2).
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMask<T> {
    height: usize,
    width: usize,
    sigma: f64,
    data: Vec<T>,
}

impl<T: Real> GaussianMask<T> {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.width + c]
    }

    /// Elementwise product with a spectrum whose high or low band is central.
    pub fn apply(&self, spec: &Spectrum2D<T>) -> Result<Spectrum2D<T>> {
        if spec.layout == Layout::Standard {
            return Err(Error::Layout {
                expected: Layout::Overturned,
                found: Layout::Standard,
            });
        }
        if (spec.height, spec.width) != (self.height, self.width) {
            return Err(Error::Dimension("mask and spectrum sizes differ".into()));
        }
        let data = spec.data.iter().zip(&self.data).map(|(&z, &m)| z * m).collect();
        Spectrum2D::new(spec.height, spec.width, data, spec.layout)
    }
}

pub fn gaussian_mask<T: Real>(height: usize, width: usize, sigma: f64) -> Result<GaussianMask<T>> {
    if !(sigma > 0.0) || sigma.is_nan() {
        return Err(Error::InvalidParameter(format!("mask sigma must be > 0, got {sigma}")));
    }
    let (cy, cx) = ((height / 2) as f64, (width / 2) as f64);
    let denom = 2.0 * sigma * sigma;
    let mut data = Vec::with_capacity(height * width);
    for r in 0..height {
        for c in 0..width {
            let d2 = (r as f64 - cy).powi(2) + (c as f64 - cx).powi(2);
            data.push(T::lit((-d2 / denom).exp()));
        }
    }
    Ok(GaussianMask {
        height,
        width,
        sigma,
        data,
    })
}

/// Inclusive σ grid for [`select_sigma`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaSweep {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for SigmaSweep {
    fn default() -> Self {
        Self {
            lo: 10.0,
            hi: 50.0,
            step: 1.0,
        }
    }
}

impl SigmaSweep {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.lo > 0.0 && self.step > 0.0 && self.hi >= self.lo) {
            return Err(Error::InvalidParameter(format!("bad sigma sweep {self:?}")));
        }
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|i| self.lo + i as f64 * self.step).collect())
    }
}

#[derive(Clone, Debug)]
pub struct SigmaSelection {
    pub sigma: f64,
    /// `(sigma, J(sigma))` for every swept value.
    pub table: Vec<(f64, f64)>,
}

fn mean_std(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Balance between the high-frequency (central square of side h/2 after
/// overturning) and low-frequency (the rest) regions of a masked magnitude
/// spectrum: |mean_hf − mean_lf| + |std_hf − std_lf|.
fn balance_cost(magnitude: &[f64], mask: &GaussianMask<f64>) -> f64 {
    let (h, w) = mask.dims();
    let (r0, r1, c0, c1) = (h / 4, h / 4 + h / 2, w / 4, w / 4 + w / 2);
    let mut hf = Vec::new();
    let mut lf = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let v = magnitude[r * w + c] * mask.get(r, c);
            if (r0..r1).contains(&r) && (c0..c1).contains(&c) {
                hf.push(v);
            } else {
                lf.push(v);
            }
        }
    }
    let (mh, sh) = mean_std(hf.into_iter());
    let (ml, sl) = mean_std(lf.into_iter());
    (mh - ml).abs() + (sh - sl).abs()
}

/// Sweeps the mask width and returns the σ minimising the averaged balance
/// cost (ties go to the smaller σ).
pub fn select_sigma<T: Real>(calibration: &[Image2D<T>], sweep: SigmaSweep) -> Result<SigmaSelection> {
    let first = calibration
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty calibration set".into()))?;
    let (h, w) = first.dims();
    if h < 4 || w < 4 {
        return Err(Error::Dimension("calibration images must be at least 4x4".into()));
    }
    let magnitudes = calibration
        .iter()
        .map(|img| {
            if img.dims() != (h, w) {
                return Err(Error::Dimension("calibration images differ in size".into()));
            }
            let spec = overturn(&fft2_ortho(&img.cast::<f64>()))?;
            Ok(spec.data().iter().map(|z| z.norm()).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Vec::new();
    for sigma in sweep.values()? {
        let mask = gaussian_mask::<f64>(h, w, sigma)?;
        let cost = magnitudes.iter().map(|m| balance_cost(m, &mask)).sum::<f64>() / magnitudes.len() as f64;
        table.push((sigma, cost));
    }
    let best = table
        .iter()
        .fold(table[0], |best, &cur| if cur.1 < best.1 { cur } else { best });
    Ok(SigmaSelection { sigma: best.0, table })
}

/// Paper-default σ = 32 at 256², scaled to keep the relative footprint.
pub fn default_mask_sigma(size: usize) -> f64 {
    32.0 * size as f64 / 256.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Direct O(N⁴) orthonormal DFT.
    fn dft_oracle(img: &Image2D<f64>) -> Vec<Complex<f64>> {
        let (h, w) = img.dims();
        let mut out = vec![Complex::new(0.0, 0.0); h * w];
        for ky in 0..h {
            for kx in 0..w {
                let mut acc = Complex::new(0.0, 0.0);
                for y in 0..h {
                    for x in 0..w {
                        let phase = -2.0 * PI * ((ky * y) as f64 / h as f64 + (kx * x) as f64 / w as f64);
                        acc += Complex::from_polar(img[(y, x)], phase);
                    }
                }
                out[ky * w + kx] = acc / ((h * w) as f64).sqrt();
            }
        }
        out
    }

    fn pseudo_random(h: usize, w: usize, seed: u64) -> Image2D<f64> {
        use rand::Rng;
        let mut r = crate::rng::stream(seed, &[]);
        Image2D::from_fn(h, w, |_, _| r.gen_range(0.0..1.0))
    }

    #[test]
    fn constant_image_has_single_dc_coefficient() {
        let n = 8;
        let spec = fft2_ortho(&Image2D::<f64>::filled(n, n, 0.7));
        assert!((spec.get(0, 0).re - 0.7 * n as f64).abs() < 1e-12);
        for (i, z) in spec.data().iter().enumerate().skip(1) {
            assert!(z.norm() < 1e-12, "bin {i}");
        }
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let n = 8;
        let mut img = Image2D::<f64>::zeros(n, n);
        img[(0, 0)] = 1.0;
        for z in fft2_ortho(&img).data() {
            assert!((z.re - 1.0 / n as f64).abs() < 1e-14 && z.im.abs() < 1e-14);
        }
    }

    #[test]
    fn matches_direct_dft_and_parseval() {
        let img = pseudo_random(8, 8, 1);
        let fast = fft2_ortho(&img);
        let slow = dft_oracle(&img);
        for (a, b) in fast.data().iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!((fast.energy() - img.energy()).abs() <= 1e-12);
        let rect = pseudo_random(6, 10, 2);
        for (a, b) in fft2_ortho(&rect).data().iter().zip(&dft_oracle(&rect)) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn inverse_round_trip_and_zero() {
        let img = pseudo_random(16, 12, 3);
        let back = ifft2_ortho(&fft2_ortho(&img)).unwrap();
        for (a, b) in back.image.data().iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(back.max_imag_residual < 1e-12);
        let zero = ifft2_ortho(&Spectrum2D::<f64>::zeros(4, 4, Layout::Standard)).unwrap();
        assert!(zero.image.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cropping_breaks_hermitian_symmetry_and_residual_is_reported() {
        let img = pseudo_random(16, 16, 4);
        let cropped = crop_center(&shift_center(&fft2_ortho(&img)).unwrap(), 8, 8).unwrap();
        let inv = ifft2_ortho(&unshift_center(&cropped).unwrap()).unwrap();
        // The kept -N/2 row/column has no +N/2 partner, so the inverse is complex.
        assert!(inv.max_imag_residual > 1e-6);
        assert!(inv.max_imag_residual < 1.0);
    }

    #[test]
    fn layout_is_enforced() {
        let spec = fft2_ortho(&pseudo_random(4, 4, 5));
        let centered = shift_center(&spec).unwrap();
        assert!(matches!(ifft2_ortho(&centered), Err(Error::Layout { .. })));
        assert!(shift_center(&centered).is_err());
        assert!(crop_center(&spec, 2, 2).is_err());
        assert!(overturn(&centered).is_err());
    }

    #[test]
    fn shift_center_is_an_involution_on_even_sizes() {
        let spec = fft2_ortho(&pseudo_random(8, 6, 6));
        let twice = shift_center(&shift_center(&spec).unwrap().retag(Layout::Standard)).unwrap();
        assert_eq!(twice.data(), spec.data());
        let odd = fft2_ortho(&pseudo_random(5, 7, 7));
        assert_eq!(unshift_center(&shift_center(&odd).unwrap()).unwrap(), odd);
    }

    #[test]
    fn dc_lands_in_the_centre() {
        let spec = shift_center(&fft2_ortho(&Image2D::<f64>::filled(8, 8, 1.0))).unwrap();
        assert!((spec.get(4, 4).re - 8.0).abs() < 1e-12);
    }

    #[test]
    fn checkerboard_peaks_at_centre_after_overturn() {
        let n = 8;
        let board = Image2D::<f64>::from_fn(n, n, |r, c| if (r + c) % 2 == 0 { 1.0 } else { -1.0 });
        let spec = overturn(&fft2_ortho(&board)).unwrap();
        let (imax, _) = spec
            .data()
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, z)| if z.norm() > acc.1 { (i, z.norm()) } else { acc });
        assert_eq!((imax / n, imax % n), (n / 2, n / 2));
        assert!((spec.get(n / 2, n / 2).re - n as f64).abs() < 1e-12);
        assert_eq!(restore_standard(&spec).unwrap().layout(), Layout::Standard);
    }

    #[test]
    fn full_size_crop_is_identity() {
        let spec = shift_center(&fft2_ortho(&pseudo_random(8, 8, 8))).unwrap();
        assert_eq!(crop_center(&spec, 8, 8).unwrap(), spec);
        assert!(crop_center(&spec, 3, 4).is_err());
        assert!(crop_center(&spec, 10, 4).is_err());
    }

    #[test]
    fn constant_survives_crop() {
        let img = Image2D::<f64>::filled(256, 256, 0.42);
        let cropped = crop_center(&shift_center(&fft2_ortho(&img)).unwrap(), 128, 128).unwrap();
        let out = ifft2_ortho(&unshift_center(&cropped).unwrap()).unwrap().image;
        assert_eq!(out.dims(), (128, 128));
        for &v in out.data() {
            assert!((v - 0.42).abs() < 1e-12);
        }
    }

    #[test]
    fn band_limited_cosine_survives_crop() {
        // Period 16 px on 256², i.e. 16 cycles: inside the 128² block.
        let img = Image2D::<f64>::from_fn(256, 256, |r, c| (2.0 * PI * (r as f64 + 2.0 * c as f64) / 16.0).cos());
        let cropped = crop_center(&shift_center(&fft2_ortho(&img)).unwrap(), 128, 128).unwrap();
        let out = ifft2_ortho(&unshift_center(&cropped).unwrap()).unwrap().image;
        let want = Image2D::<f64>::from_fn(128, 128, |r, c| (2.0 * PI * (r as f64 + 2.0 * c as f64) / 8.0).cos());
        for (a, b) in out.data().iter().zip(want.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn pad_inverts_crop_on_the_block() {
        let spec = shift_center(&fft2_ortho(&pseudo_random(8, 8, 9))).unwrap();
        let small = crop_center(&spec, 4, 4).unwrap();
        let back = crop_center(&pad_center(&small, 8, 8).unwrap(), 4, 4).unwrap();
        for (a, b) in back.data().iter().zip(small.data()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn gaussian_mask_values() {
        let m = gaussian_mask::<f64>(64, 64, 8.0).unwrap();
        assert_eq!(m.get(32, 32), 1.0);
        assert!((m.get(32, 40) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((m.get(40, 32) - 0.606_530_659_712_633_4).abs() < 1e-12);
        // Symmetric about the centre.
        for d in 1..32 {
            assert_eq!(m.get(32 + d, 32), m.get(32 - d, 32));
            assert_eq!(m.get(32, 32 + d), m.get(32, 32 - d));
        }
        assert!(m.data().iter().all(|&v| v > 0.0 && v <= 1.0));
        assert!(gaussian_mask::<f64>(4, 4, 0.0).is_err());
        assert!(gaussian_mask::<f64>(4, 4, -1.0).is_err());
        assert_eq!(default_mask_sigma(256), 32.0);
    }

    #[test]
    fn mask_requires_non_standard_layout() {
        let spec = fft2_ortho(&pseudo_random(4, 4, 10));
        let m = gaussian_mask::<f64>(4, 4, 2.0).unwrap();
        assert!(m.apply(&spec).is_err());
        assert!(m.apply(&overturn(&spec).unwrap()).is_ok());
    }

    #[test]
    fn sigma_sweep_is_deterministic_and_in_range() {
        let img = pseudo_random(32, 32, 11);
        let a = select_sigma(&[img.clone()], SigmaSweep::default()).unwrap();
        let b = select_sigma(&[img], SigmaSweep::default()).unwrap();
        assert_eq!(a.sigma, b.sigma);
        assert_eq!(a.table.len(), 41);
        assert!((10.0..=50.0).contains(&a.sigma));
        assert!(select_sigma::<f64>(&[], SigmaSweep::default()).is_err());
    }

    #[test]
    fn sigma_ties_prefer_smaller() {
        // Constant image: every sigma sees the same (degenerate) spectrum shape.
        let img = Image2D::<f64>::zeros(16, 16);
        let sel = select_sigma(&[img], SigmaSweep { lo: 3.0, hi: 6.0, step: 1.0 }).unwrap();
        assert_eq!(sel.sigma, 3.0);
    }
}
