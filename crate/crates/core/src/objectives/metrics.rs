//! PSNR and mean±std aggregation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::Image2D;
use crate::scalar::Real;

/// 10·log10(peak² / MSE); `+inf` for identical images.
pub fn psnr<T: Real>(x: &Image2D<T>, y: &Image2D<T>, peak: f64) -> Result<f64> {
    x.ensure_same_dims(y)?;
    let mse = x
        .data()
        .iter()
        .zip(y.data())
        .map(|(&a, &b)| (a.as_f64() - b.as_f64()).powi(2))
        .sum::<f64>()
        / x.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Sample mean and population standard deviation of the finite values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4}±{:.4}", self.mean, self.std)
    }
}

/// Non-finite values (the identical-image PSNR sentinel) are skipped.
pub fn aggregate(values: &[f64]) -> Result<Aggregate> {
    let kept: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let n = kept.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("aggregate needs at least 2 finite values, got {n}")));
    }
    let mean = kept.iter().sum::<f64>() / n as f64;
    let var = kept.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    Ok(Aggregate {
        mean,
        std: var.sqrt(),
        n,
    })
}
