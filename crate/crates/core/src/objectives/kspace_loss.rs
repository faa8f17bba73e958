//! Mean squared k-space error, optionally weighted by the Gaussian mask on
//! overturned spectra.

use num_complex::Complex;

use crate::error::Result;
use crate::imgcore::Image2D;
use crate::kspace::{fft2_complex, gaussian_mask};
use crate::scalar::Real;

/// Mean |D|² over bins, D = F(x) − F(y) (masked: m·D on the overturned grid).
pub fn kspace_mse<T: Real>(x: &Image2D<T>, y: &Image2D<T>, masked: bool, sigma: f64) -> Result<T> {
    Ok(kspace_mse_grad(x, y, masked, sigma, false)?.0)
}

pub fn kspace_mse_grad<T: Real>(
    x: &Image2D<T>,
    y: &Image2D<T>,
    masked: bool,
    sigma: f64,
    want_grad: bool,
) -> Result<(T, Option<Image2D<T>>)> {
    x.ensure_same_dims(y)?;
    let (h, w) = x.dims();
    let n = T::lit((h * w) as f64);
    let mut diff: Vec<Complex<T>> = x
        .data()
        .iter()
        .zip(y.data())
        .map(|(&a, &b)| Complex::new(a - b, T::zero()))
        .collect();
    // The overturned layout shares the standard arrangement, so the mask
    // applies index-for-index to the standard spectrum.
    let mask = masked.then(|| gaussian_mask::<T>(h, w, sigma)).transpose()?;
    fft2_complex(&mut diff, h, w, false);
    let mut total = T::zero();
    for (i, z) in diff.iter_mut().enumerate() {
        let m2 = mask.as_ref().map_or(T::one(), |m| m.data()[i] * m.data()[i]);
        total = total + z.norm_sqr() * m2;
        *z = *z * m2;
    }
    if !want_grad {
        return Ok((total / n, None));
    }
    fft2_complex(&mut diff, h, w, true);
    let scale = T::lit(2.0) / n;
    let grad = Image2D::new(h, w, diff.iter().map(|z| z.re * scale).collect())?;
    Ok((total / n, Some(grad)))
}
