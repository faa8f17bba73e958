//! Gaussian-window SSIM on the valid region (windows fully inside the image).

use crate::error::{Error, Result};
use crate::imgcore::Image2D;
use crate::scalar::Real;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
/// (0.01 · L)² with dynamic range L = 1.
pub const SSIM_C1: f64 = 1e-4;
/// (0.03 · L)².
pub const SSIM_C2: f64 = 9e-4;

/// Normalized 1D Gaussian taps; the 2D window is their outer product.
pub fn gaussian_window(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..size)
        .map(|i| (-(i as f64 - c).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Separable valid-mode filtering with the SSIM window.
struct Window<T> {
    taps: Vec<T>,
}

impl<T: Real> Window<T> {
    fn new() -> Self {
        Self {
            taps: gaussian_window(SSIM_WINDOW, SSIM_SIGMA).into_iter().map(T::lit).collect(),
        }
    }

    fn out_dims(&self, h: usize, w: usize) -> (usize, usize) {
        let k = self.taps.len();
        (h + 1 - k, w + 1 - k)
    }

    fn filter(&self, data: &[T], h: usize, w: usize) -> Vec<T> {
        let (oh, ow) = self.out_dims(h, w);
        let mut rows = vec![T::zero(); h * ow];
        for r in 0..h {
            let src = &data[r * w..(r + 1) * w];
            for c in 0..ow {
                let mut acc = T::zero();
                for (t, &g) in self.taps.iter().enumerate() {
                    acc = acc + g * src[c + t];
                }
                rows[r * ow + c] = acc;
            }
        }
        let mut out = vec![T::zero(); oh * ow];
        for r in 0..oh {
            for (t, &g) in self.taps.iter().enumerate() {
                let src = &rows[(r + t) * ow..(r + t + 1) * ow];
                for (o, &s) in out[r * ow..(r + 1) * ow].iter_mut().zip(src) {
                    *o = *o + g * s;
                }
            }
        }
        out
    }

    /// Adjoint of [`Self::filter`]: spreads an `oh×ow` map back to `h×w`.
    fn adjoint(&self, grad: &[T], h: usize, w: usize) -> Vec<T> {
        let (oh, ow) = self.out_dims(h, w);
        let mut rows = vec![T::zero(); h * ow];
        for r in 0..oh {
            for (t, &g) in self.taps.iter().enumerate() {
                let dst = &mut rows[(r + t) * ow..(r + t + 1) * ow];
                for (d, &s) in dst.iter_mut().zip(&grad[r * ow..(r + 1) * ow]) {
                    *d = *d + g * s;
                }
            }
        }
        let mut out = vec![T::zero(); h * w];
        for r in 0..h {
            let dst = &mut out[r * w..(r + 1) * w];
            for c in 0..ow {
                let v = rows[r * ow + c];
                for (t, &g) in self.taps.iter().enumerate() {
                    dst[c + t] = dst[c + t] + g * v;
                }
            }
        }
        out
    }
}

struct SsimParts<T> {
    dims: (usize, usize),
    mu_x: Vec<T>,
    mu_y: Vec<T>,
    var_x: Vec<T>,
    var_y: Vec<T>,
    cov: Vec<T>,
    map: Vec<T>,
}

fn ssim_parts<T: Real>(x: &Image2D<T>, y: &Image2D<T>, window: &Window<T>) -> Result<SsimParts<T>> {
    x.ensure_same_dims(y)?;
    let (h, w) = x.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::Dimension(format!(
            "{h}x{w} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )));
    }
    let (xd, yd) = (x.data(), y.data());
    let xx: Vec<T> = xd.iter().map(|&v| v * v).collect();
    let yy: Vec<T> = yd.iter().map(|&v| v * v).collect();
    let xy: Vec<T> = xd.iter().zip(yd).map(|(&a, &b)| a * b).collect();
    let mu_x = window.filter(xd, h, w);
    let mu_y = window.filter(yd, h, w);
    let exx = window.filter(&xx, h, w);
    let eyy = window.filter(&yy, h, w);
    let exy = window.filter(&xy, h, w);
    let (c1, c2) = (T::lit(SSIM_C1), T::lit(SSIM_C2));
    let two = T::lit(2.0);
    let n = mu_x.len();
    let mut var_x = Vec::with_capacity(n);
    let mut var_y = Vec::with_capacity(n);
    let mut cov = Vec::with_capacity(n);
    let mut map = Vec::with_capacity(n);
    for i in 0..n {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let vx = exx[i] - mx * mx;
        let vy = eyy[i] - my * my;
        let cxy = exy[i] - mx * my;
        let s = (two * mx * my + c1) * (two * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        var_x.push(vx);
        var_y.push(vy);
        cov.push(cxy);
        map.push(s);
    }
    Ok(SsimParts {
        dims: window.out_dims(h, w),
        mu_x,
        mu_y,
        var_x,
        var_y,
        cov,
        map,
    })
}

/// Local SSIM over every fully-contained window; the map is
/// `(h − 10) × (w − 10)`.
pub fn ssim_map<T: Real>(x: &Image2D<T>, y: &Image2D<T>) -> Result<Image2D<T>> {
    let parts = ssim_parts(x, y, &Window::new())?;
    Image2D::new(parts.dims.0, parts.dims.1, parts.map)
}

/// Mean of [`ssim_map`].
pub fn ssim_index<T: Real>(x: &Image2D<T>, y: &Image2D<T>) -> Result<T> {
    Ok(ssim_map(x, y)?.mean())
}

/// Mean |1 − SSIM map|.
pub fn loss_ssim_l1<T: Real>(x: &Image2D<T>, y: &Image2D<T>) -> Result<T> {
    Ok(loss_ssim_l1_grad(x, y, false)?.0)
}

pub fn loss_ssim_l1_grad<T: Real>(x: &Image2D<T>, y: &Image2D<T>, want_grad: bool) -> Result<(T, Option<Image2D<T>>)> {
    let window = Window::new();
    let p = ssim_parts(x, y, &window)?;
    let n = T::lit(p.map.len() as f64);
    let loss = p.map.iter().map(|&s| (T::one() - s).abs()).sum::<T>() / n;
    if !want_grad {
        return Ok((loss, None));
    }
    let (h, w) = x.dims();
    let (c1, c2) = (T::lit(SSIM_C1), T::lit(SSIM_C2));
    let two = T::lit(2.0);
    let m = p.map.len();
    let mut g_mu = vec![T::zero(); m];
    let mut g_exx = vec![T::zero(); m];
    let mut g_exy = vec![T::zero(); m];
    for i in 0..m {
        let s = p.map[i];
        let d = T::one() - s;
        let g_s = if d > T::zero() {
            -T::one() / n
        } else if d < T::zero() {
            T::one() / n
        } else {
            T::zero()
        };
        let (mx, my) = (p.mu_x[i], p.mu_y[i]);
        let a1 = two * mx * my + c1;
        let a2 = two * p.cov[i] + c2;
        let b1 = mx * mx + my * my + c1;
        let b2 = p.var_x[i] + p.var_y[i] + c2;
        let ds_dmu = two * my * a2 / (b1 * b2) - two * mx * s / b1;
        let ds_dvar = -s / b2;
        let ds_dcov = two * a1 / (b1 * b2);
        // var_x = E[x²] − μx², cov = E[xy] − μx μy
        g_mu[i] = g_s * (ds_dmu - two * mx * ds_dvar - my * ds_dcov);
        g_exx[i] = g_s * ds_dvar;
        g_exy[i] = g_s * ds_dcov;
    }
    let a_mu = window.adjoint(&g_mu, h, w);
    let a_xx = window.adjoint(&g_exx, h, w);
    let a_xy = window.adjoint(&g_exy, h, w);
    let grad: Vec<T> = (0..h * w)
        .map(|i| a_mu[i] + two * x.data()[i] * a_xx[i] + y.data()[i] * a_xy[i])
        .collect();
    Ok((loss, Some(Image2D::new(h, w, grad)?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random(h: usize, w: usize, seed: u64) -> Image2D<f64> {
        let mut r = crate::rng::stream(seed, &[]);
        Image2D::from_fn(h, w, |_, _| r.gen_range(0.0..1.0))
    }

    #[test]
    fn window_is_normalized_and_symmetric() {
        let g = gaussian_window(11, 1.5);
        assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for i in 0..5 {
            assert_eq!(g[i], g[10 - i]);
        }
    }

    #[test]
    fn self_similarity_is_exactly_one() {
        let x = random(24, 20, 1);
        let map = ssim_map(&x, &x).unwrap();
        assert_eq!(map.dims(), (14, 10));
        assert!(map.data().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert_eq!(loss_ssim_l1(&x, &x).unwrap() < 1e-12, true);
    }

    #[test]
    fn inverted_image_is_anticorrelated() {
        let x = random(32, 32, 2);
        let y = x.map(|v| 1.0 - v);
        assert!(ssim_index(&x, &y).unwrap() < 0.0);
    }

    #[test]
    fn symmetric_in_arguments() {
        let x = random(16, 16, 3);
        let y = random(16, 16, 4);
        assert!((ssim_index(&x, &y).unwrap() - ssim_index(&y, &x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn loss_is_one_minus_index_when_map_below_one() {
        let x = random(20, 20, 5);
        let y = random(20, 20, 6);
        let map = ssim_map(&x, &y).unwrap();
        assert!(map.data().iter().all(|&v| v <= 1.0));
        let l = loss_ssim_l1(&x, &y).unwrap();
        assert!((l - (1.0 - ssim_index(&x, &y).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn too_small_is_an_error() {
        let x = random(10, 30, 7);
        assert!(ssim_map(&x, &x).is_err());
        assert!(ssim_map(&random(12, 12, 1), &random(12, 13, 1)).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let x = random(14, 13, 8);
        let y = random(14, 13, 9);
        let (_, g) = loss_ssim_l1_grad(&x, &y, true).unwrap();
        let g = g.unwrap();
        let h = 1e-6;
        for i in (0..x.len()).step_by(7) {
            let mut xp = x.clone();
            xp.data_mut()[i] += h;
            let mut xm = x.clone();
            xm.data_mut()[i] -= h;
            let fd = (loss_ssim_l1(&xp, &y).unwrap() - loss_ssim_l1(&xm, &y).unwrap()) / (2.0 * h);
            assert!((fd - g.data()[i]).abs() < 1e-7 * (1.0 + fd.abs()), "{i}: {fd} vs {}", g.data()[i]);
        }
    }

    fn direct_loss(x: &Image2D<f64>, y: &Image2D<f64>) -> f64 {
        let (h, w) = x.dims();
        let c = 5.0;
        let mut taps = [[0.0f64; 11]; 11];
        let mut sum = 0.0;
        for (i, row) in taps.iter_mut().enumerate() {
            for (j, t) in row.iter_mut().enumerate() {
                *t = (-((i as f64 - c).powi(2) + (j as f64 - c).powi(2)) / 4.5).exp();
                sum += *t;
            }
        }
        let mut total = 0.0;
        let mut count = 0.0;
        for r in 0..=h - 11 {
            for cc in 0..=w - 11 {
                let (mut mx, mut my) = (0.0, 0.0);
                for i in 0..11 {
                    for j in 0..11 {
                        let g = taps[i][j] / sum;
                        mx += g * x[(r + i, cc + j)];
                        my += g * y[(r + i, cc + j)];
                    }
                }
                let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
                for i in 0..11 {
                    for j in 0..11 {
                        let g = taps[i][j] / sum;
                        let (a, b) = (x[(r + i, cc + j)] - mx, y[(r + i, cc + j)] - my);
                        vx += g * a * a;
                        vy += g * b * b;
                        cxy += g * a * b;
                    }
                }
                let s = (2.0 * mx * my + 1e-4) * (2.0 * cxy + 9e-4) / ((mx * mx + my * my + 1e-4) * (vx + vy + 9e-4));
                total += (1.0 - s).abs();
                count += 1.0;
            }
        }
        total / count
    }

    #[test]
    fn loss_matches_direct_definition() {
        let x = random(32, 32, 10);
        let y = x.map(|v| (v * 0.7 + 0.1).min(1.0));
        let y = Image2D::from_fn(32, 32, |r, c| (y[(r, c)] + 0.05 * ((r * c) as f64).sin()).clamp(0.0, 1.0));
        assert!((loss_ssim_l1(&x, &y).unwrap() - direct_loss(&x, &y)).abs() < 1e-9);
        let z = random(32, 32, 11);
        assert!((loss_ssim_l1(&x, &z).unwrap() - direct_loss(&x, &z)).abs() < 1e-9);
    }
}
