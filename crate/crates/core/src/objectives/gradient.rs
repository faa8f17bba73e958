//! Sobel gradient-magnitude maps and their L1 loss.

use crate::error::{Error, Result};
use crate::imgcore::Image2D;
use crate::scalar::Real;

/// Largest Sobel magnitude reachable on inputs in [0,1]: gx = 4, gy = 2.
pub const SOBEL_MAX_RESPONSE: f64 = 4.472_135_954_999_579;

const KX: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
const KY: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];

/// Reflect without repeating the edge sample: −1 → 1, n → n − 2.
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let j = if i < 0 {
        -i
    } else if i >= n {
        2 * n - 2 - i
    } else {
        i
    };
    j as usize
}

fn check_size<T: Real>(img: &Image2D<T>) -> Result<()> {
    if img.height() < 3 || img.width() < 3 {
        return Err(Error::Dimension(format!(
            "gradient map needs at least 3x3, got {}x{}",
            img.height(),
            img.width()
        )));
    }
    Ok(())
}

/// Raw Sobel responses `(gx, gy)`, written as differences so constant
/// regions give exact zeros.
fn sobel<T: Real>(img: &Image2D<T>) -> (Vec<T>, Vec<T>) {
    let (h, w) = img.dims();
    let two = T::lit(2.0);
    let mut gx = vec![T::zero(); h * w];
    let mut gy = vec![T::zero(); h * w];
    for r in 0..h {
        let rows = [reflect(r as isize - 1, h), r, reflect(r as isize + 1, h)];
        for c in 0..w {
            let cols = [reflect(c as isize - 1, w), c, reflect(c as isize + 1, w)];
            let v = |i: usize, j: usize| img[(rows[i], cols[j])];
            gx[r * w + c] = (v(0, 2) - v(0, 0)) + two * (v(1, 2) - v(1, 0)) + (v(2, 2) - v(2, 0));
            gy[r * w + c] = (v(2, 0) - v(0, 0)) + two * (v(2, 1) - v(0, 1)) + (v(2, 2) - v(0, 2));
        }
    }
    (gx, gy)
}

/// Adjoint of [`sobel`] applied to per-pixel weights on `gx` and `gy`.
fn sobel_adjoint<T: Real>(wx: &[T], wy: &[T], h: usize, w: usize) -> Vec<T> {
    let mut out = vec![T::zero(); h * w];
    for r in 0..h {
        for c in 0..w {
            let (ax, ay) = (wx[r * w + c], wy[r * w + c]);
            if ax == T::zero() && ay == T::zero() {
                continue;
            }
            for (i, (kx, ky)) in KX.iter().zip(&KY).enumerate() {
                let rr = reflect(r as isize + i as isize - 1, h);
                for j in 0..3 {
                    let cc = reflect(c as isize + j as isize - 1, w);
                    out[rr * w + cc] = out[rr * w + cc] + T::lit(kx[j]) * ax + T::lit(ky[j]) * ay;
                }
            }
        }
    }
    out
}

/// Sobel magnitude with reflective borders, scaled into [0,1].
pub fn grad_map<T: Real>(img: &Image2D<T>) -> Result<Image2D<T>> {
    check_size(img)?;
    let (gx, gy) = sobel(img);
    let scale = T::lit(SOBEL_MAX_RESPONSE);
    let data = gx.iter().zip(&gy).map(|(&a, &b)| (a * a + b * b).sqrt() / scale).collect();
    Image2D::new(img.height(), img.width(), data)
}

/// Elementwise 1 − exp(−a·M).
pub fn amplify_grad<T: Real>(map: &Image2D<T>, a: T) -> Image2D<T> {
    map.map(|m| T::one() - (-a * m).exp())
}

/// Mean |G(x) − G(y)|, with both maps amplified when `amplified`.
pub fn loss_grad_l1<T: Real>(x: &Image2D<T>, y: &Image2D<T>, amplified: bool, a: T) -> Result<T> {
    Ok(loss_grad_l1_grad(x, y, amplified, a, false)?.0)
}

pub fn loss_grad_l1_grad<T: Real>(
    x: &Image2D<T>,
    y: &Image2D<T>,
    amplified: bool,
    a: T,
    want_grad: bool,
) -> Result<(T, Option<Image2D<T>>)> {
    x.ensure_same_dims(y)?;
    check_size(x)?;
    if amplified && !(a > T::zero()) {
        return Err(Error::InvalidParameter("gradient amplification a must be > 0".into()));
    }
    let (h, w) = x.dims();
    let scale = T::lit(SOBEL_MAX_RESPONSE);
    let (gx, gy) = sobel(x);
    let mx: Vec<T> = gx.iter().zip(&gy).map(|(&p, &q)| (p * p + q * q).sqrt() / scale).collect();
    let my = grad_map(y)?;
    let amp = |m: T| if amplified { T::one() - (-a * m).exp() } else { m };
    let n = T::lit((h * w) as f64);
    let mut total = T::zero();
    let mut wx = vec![T::zero(); h * w];
    let mut wy = vec![T::zero(); h * w];
    for i in 0..h * w {
        let d = amp(mx[i]) - amp(my.data()[i]);
        total = total + d.abs();
        if !want_grad || mx[i] == T::zero() || d == T::zero() {
            continue;
        }
        let mut g = d.signum() / n;
        if amplified {
            g = g * a * (-a * mx[i]).exp();
        }
        // d|g|/dgx = gx / |g|, with |g| = mx · scale
        let mag = mx[i] * scale;
        let k = g / (scale * mag);
        wx[i] = k * gx[i];
        wy[i] = k * gy[i];
    }
    let grad = if want_grad {
        Some(Image2D::new(h, w, sobel_adjoint(&wx, &wy, h, w))?)
    } else {
        None
    };
    Ok((total / n, grad))
}
