//! Single-sample feature maps (channels × height × width) and the dense
//! kernels the network is built from.

use crate::error::{Error, Result};
use crate::imgcore::Image2D;
use crate::scalar::{matmul, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::Dimension(format!(
                "tensor {channels}x{height}x{width} needs {} values, got {}",
                channels * height * width,
                data.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![T::zero(); channels * height * width],
        }
    }

    pub fn from_image(img: &Image2D<T>) -> Self {
        Self {
            channels: 1,
            height: img.height(),
            width: img.width(),
            data: img.data().to_vec(),
        }
    }

    /// Single-channel tensor back to an image.
    pub fn into_image(self) -> Result<Image2D<T>> {
        if self.channels != 1 {
            return Err(Error::Dimension(format!("expected 1 channel, got {}", self.channels)));
        }
        Image2D::new(self.height, self.width, self.data)
    }

    pub fn plane(&self) -> usize {
        self.height * self.width
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        (self.channels, self.height, self.width) == (other.channels, other.height, other.width)
    }
}

/// Geometry of one convolution layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvShape {
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvShape {
    pub fn weight_len(&self) -> usize {
        self.c_out * self.c_in * self.kernel * self.kernel
    }

    pub fn out_dims(&self, h: usize, w: usize) -> (usize, usize) {
        let o = |n: usize| (n + 2 * self.pad - self.kernel) / self.stride + 1;
        (o(h), o(w))
    }

    fn patch_len(&self) -> usize {
        self.c_in * self.kernel * self.kernel
    }
}

fn im2col<T: Real>(x: &Tensor<T>, s: &ConvShape) -> Vec<T> {
    let (oh, ow) = s.out_dims(x.height, x.width);
    let p = oh * ow;
    let k = s.kernel;
    let mut cols = vec![T::zero(); s.patch_len() * p];
    for ci in 0..s.c_in {
        let src = &x.data[ci * x.plane()..(ci + 1) * x.plane()];
        for ki in 0..k {
            for kj in 0..k {
                let row = &mut cols[((ci * k + ki) * k + kj) * p..][..p];
                for oy in 0..oh {
                    let iy = (oy * s.stride + ki) as isize - s.pad as isize;
                    if iy < 0 || iy >= x.height as isize {
                        continue;
                    }
                    let line = &src[iy as usize * x.width..][..x.width];
                    for ox in 0..ow {
                        let ix = (ox * s.stride + kj) as isize - s.pad as isize;
                        if ix >= 0 && ix < x.width as isize {
                            row[oy * ow + ox] = line[ix as usize];
                        }
                    }
                }
            }
        }
    }
    cols
}

fn col2im<T: Real>(cols: &[T], s: &ConvShape, h: usize, w: usize) -> Vec<T> {
    let (oh, ow) = s.out_dims(h, w);
    let p = oh * ow;
    let k = s.kernel;
    let mut out = vec![T::zero(); s.c_in * h * w];
    for ci in 0..s.c_in {
        let dst = &mut out[ci * h * w..(ci + 1) * h * w];
        for ki in 0..k {
            for kj in 0..k {
                let row = &cols[((ci * k + ki) * k + kj) * p..][..p];
                for oy in 0..oh {
                    let iy = (oy * s.stride + ki) as isize - s.pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let line = &mut dst[iy as usize * w..][..w];
                    for ox in 0..ow {
                        let ix = (ox * s.stride + kj) as isize - s.pad as isize;
                        if ix >= 0 && ix < w as isize {
                            line[ix as usize] = line[ix as usize] + row[oy * ow + ox];
                        }
                    }
                }
            }
        }
    }
    out
}

/// Convolution (cross-correlation) with zero padding. Returns the output and
/// the unfolded input needed by [`conv2d_backward`].
pub fn conv2d_forward<T: Real>(x: &Tensor<T>, weight: &[T], bias: &[T], s: &ConvShape) -> (Tensor<T>, Vec<T>) {
    debug_assert_eq!(x.channels, s.c_in);
    let (oh, ow) = s.out_dims(x.height, x.width);
    let p = oh * ow;
    let cols = im2col(x, s);
    let mut out = vec![T::zero(); s.c_out * p];
    for (co, &b) in bias.iter().enumerate() {
        out[co * p..(co + 1) * p].fill(b);
    }
    matmul(s.c_out, s.patch_len(), p, weight, false, &cols, false, &mut out, true);
    (
        Tensor {
            channels: s.c_out,
            height: oh,
            width: ow,
            data: out,
        },
        cols,
    )
}

/// Accumulates weight and bias gradients; returns the input gradient.
#[allow(clippy::too_many_arguments)]
pub fn conv2d_backward<T: Real>(
    grad_out: &[T],
    cols: &[T],
    weight: &[T],
    s: &ConvShape,
    in_h: usize,
    in_w: usize,
    grad_w: &mut [T],
    grad_b: &mut [T],
) -> Vec<T> {
    let (oh, ow) = s.out_dims(in_h, in_w);
    let p = oh * ow;
    let kk = s.patch_len();
    matmul(s.c_out, p, kk, grad_out, false, cols, true, grad_w, true);
    for (co, gb) in grad_b.iter_mut().enumerate() {
        *gb = *gb + grad_out[co * p..(co + 1) * p].iter().copied().sum::<T>();
    }
    let mut dcols = vec![T::zero(); kk * p];
    matmul(kk, s.c_out, p, weight, true, grad_out, false, &mut dcols, false);
    col2im(&dcols, s, in_h, in_w)
}

/// Sub-pixel rearrangement: `out(c, r·y + a, r·x + b) = in(c·r² + a·r + b, y, x)`.
pub fn pixel_shuffle<T: Real>(x: &Tensor<T>, r: usize) -> Result<Tensor<T>> {
    if r == 0 || x.channels % (r * r) != 0 {
        return Err(Error::Dimension(format!(
            "{} channels are not divisible by {}",
            x.channels,
            r * r
        )));
    }
    let c = x.channels / (r * r);
    let (h, w) = (x.height, x.width);
    let (oh, ow) = (h * r, w * r);
    let mut out = vec![T::zero(); x.data.len()];
    for ch in 0..c {
        for a in 0..r {
            for b in 0..r {
                let src = &x.data[(ch * r * r + a * r + b) * h * w..][..h * w];
                for y in 0..h {
                    for xx in 0..w {
                        out[ch * oh * ow + (r * y + a) * ow + r * xx + b] = src[y * w + xx];
                    }
                }
            }
        }
    }
    Tensor::new(c, oh, ow, out)
}

/// Inverse of [`pixel_shuffle`].
pub fn pixel_unshuffle<T: Real>(x: &Tensor<T>, r: usize) -> Result<Tensor<T>> {
    if r == 0 || x.height % r != 0 || x.width % r != 0 {
        return Err(Error::Dimension(format!(
            "{}x{} is not divisible by {r}",
            x.height, x.width
        )));
    }
    let (h, w) = (x.height / r, x.width / r);
    let mut out = vec![T::zero(); x.data.len()];
    for ch in 0..x.channels {
        for a in 0..r {
            for b in 0..r {
                let dst = &mut out[(ch * r * r + a * r + b) * h * w..][..h * w];
                for y in 0..h {
                    for xx in 0..w {
                        dst[y * w + xx] = x.data[ch * x.plane() + (r * y + a) * x.width + r * xx + b];
                    }
                }
            }
        }
    }
    Tensor::new(x.channels * r * r, h, w, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random(c: usize, h: usize, w: usize, seed: u64) -> Tensor<f64> {
        let mut rng = crate::rng::stream(seed, &[]);
        Tensor::new(c, h, w, (0..c * h * w).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn direct_conv(x: &Tensor<f64>, wt: &[f64], bias: &[f64], s: &ConvShape) -> Tensor<f64> {
        let (oh, ow) = s.out_dims(x.height, x.width);
        let k = s.kernel;
        let mut out = Tensor::zeros(s.c_out, oh, ow);
        for co in 0..s.c_out {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = bias[co];
                    for ci in 0..s.c_in {
                        for ki in 0..k {
                            for kj in 0..k {
                                let iy = (oy * s.stride + ki) as isize - s.pad as isize;
                                let ix = (ox * s.stride + kj) as isize - s.pad as isize;
                                if iy >= 0 && ix >= 0 && (iy as usize) < x.height && (ix as usize) < x.width {
                                    acc += wt[((co * s.c_in + ci) * k + ki) * k + kj]
                                        * x.data[ci * x.plane() + iy as usize * x.width + ix as usize];
                                }
                            }
                        }
                    }
                    out.data[co * oh * ow + oy * ow + ox] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn conv_matches_direct_loops() {
        for (stride, h, w) in [(1, 7, 5), (2, 8, 6), (2, 7, 9)] {
            let s = ConvShape {
                c_in: 3,
                c_out: 4,
                kernel: 3,
                stride,
                pad: 1,
            };
            let x = random(3, h, w, 1);
            let wt = random(1, 1, s.weight_len(), 2).data;
            let b = vec![0.1, -0.2, 0.3, 0.0];
            let (got, _) = conv2d_forward(&x, &wt, &b, &s);
            let want = direct_conv(&x, &wt, &b, &s);
            assert_eq!((got.height, got.width), (want.height, want.width));
            for (a, b) in got.data.iter().zip(&want.data) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conv_backward_is_the_adjoint() {
        // <dy, conv(x)> is linear in x and w, so the gradients are exact
        let s = ConvShape {
            c_in: 2,
            c_out: 3,
            kernel: 3,
            stride: 2,
            pad: 1,
        };
        let x = random(2, 6, 5, 3);
        let wt = random(1, 1, s.weight_len(), 4).data;
        let b = vec![0.0; 3];
        let (y, cols) = conv2d_forward(&x, &wt, &b, &s);
        let dy = random(3, y.height, y.width, 5).data;
        let mut gw = vec![0.0; wt.len()];
        let mut gb = vec![0.0; 3];
        let dx = conv2d_backward(&dy, &cols, &wt, &s, 6, 5, &mut gw, &mut gb);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        let f = |x: &Tensor<f64>, wt: &[f64], b: &[f64]| dot(&conv2d_forward(x, wt, b, &s).0.data, &dy);
        let base = f(&x, &wt, &b);
        for i in 0..x.data.len() {
            let mut xp = x.clone();
            xp.data[i] += 1.0;
            assert!((f(&xp, &wt, &b) - base - dx[i]).abs() < 1e-10);
        }
        for i in 0..wt.len() {
            let mut wp = wt.clone();
            wp[i] += 1.0;
            assert!((f(&x, &wp, &b) - base - gw[i]).abs() < 1e-10);
        }
        for i in 0..3 {
            let mut bp = b.clone();
            bp[i] += 1.0;
            assert!((f(&x, &wt, &bp) - base - gb[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn shuffle_index_map() {
        let x = Tensor::new(4, 1, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = pixel_shuffle(&x, 2).unwrap();
        assert_eq!((y.channels, y.height, y.width), (1, 2, 2));
        assert_eq!(y.data, vec![1.0, 2.0, 3.0, 4.0]);
        let z = random(3, 4, 5, 6);
        assert_eq!(pixel_shuffle(&z, 1).unwrap(), z);
        assert!(pixel_shuffle(&z, 2).is_err());
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let n = 8 * 3 * 5;
        let x = Tensor::new(8, 3, 5, (0..n).map(|i| i as f64).collect()).unwrap();
        let y = pixel_shuffle(&x, 2).unwrap();
        let mut seen = y.data.clone();
        seen.sort_by(f64::total_cmp);
        assert_eq!(seen, x.data);
        assert_eq!(pixel_unshuffle(&y, 2).unwrap(), x);
        let e = |t: &Tensor<f64>| t.data.iter().map(|v| v * v).sum::<f64>();
        assert_eq!(e(&x), e(&y));
    }
}
