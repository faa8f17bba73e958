use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major grayscale image.
#[derive(Clone, Debug, PartialEq)]
pub struct Image2D<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Real> Image2D<T> {
    pub fn new(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::Dimension(format!(
                "{height}x{width} image needs {} values, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Self { height, width, data })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, T::zero())
    }

    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self { height, width, data }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.width..(r + 1) * self.width]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two images with equal dims.
    pub(crate) fn map_pair(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        debug_assert_eq!(self.dims(), other.dims());
        Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Elementwise combination; errors when the dims differ.
    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::Dimension(format!("{:?} vs {:?}", self.dims(), other.dims())));
        }
        Ok(self.map_pair(other, f))
    }

    /// Converts to another precision.
    pub fn cast<U: Real>(&self) -> Image2D<U> {
        Image2D {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| U::lit(v.as_f64())).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// (min, max); `None` for an empty image.
    pub fn min_max(&self) -> Option<(T, T)> {
        let mut it = self.data.iter().copied();
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
    }

    /// Sum of squared values.
    pub fn energy(&self) -> T {
        self.data.iter().map(|&v| v * v).sum()
    }

    pub fn mean(&self) -> T {
        if self.data.is_empty() {
            return T::zero();
        }
        self.data.iter().copied().sum::<T>() / T::lit(self.data.len() as f64)
    }

    pub fn clamp_unit(&self) -> Self {
        self.map(|v| v.max(T::zero()).min(T::one()))
    }

    /// Copies out the `h×w` block whose top-left corner is `(r0, c0)`.
    pub fn crop(&self, r0: usize, c0: usize, h: usize, w: usize) -> Result<Self> {
        if r0 + h > self.height || c0 + w > self.width {
            return Err(Error::Dimension(format!(
                "crop {h}x{w} at ({r0},{c0}) exceeds {}x{}",
                self.height, self.width
            )));
        }
        let mut data = Vec::with_capacity(h * w);
        for r in r0..r0 + h {
            data.extend_from_slice(&self.data[r * self.width + c0..r * self.width + c0 + w]);
        }
        Ok(Self { height: h, width: w, data })
    }

    pub(crate) fn ensure_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )));
        }
        Ok(())
    }

    /// Returns a copy scaled to [0, 1]; see [`normalize_unit`].
    pub fn normalized(&self) -> Result<Self> {
        normalize_unit(self)
    }
}

impl<T> Index<(usize, usize)> for Image2D<T> {
    type Output = T;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.width + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Image2D<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.width + c]
    }
}

/// Affine rescale to [0, 1]: `(v - min) / (max - min)`.
///
/// A constant image maps to all zeros.
pub fn normalize_unit<T: Real>(img: &Image2D<T>) -> Result<Image2D<T>> {
    if !img.is_finite() {
        return Err(Error::InvalidImage("non-finite value".into()));
    }
    let Some((lo, hi)) = img.min_max() else {
        return Ok(img.clone());
    };
    if hi == lo {
        return Ok(Image2D::zeros(img.height, img.width));
    }
    let range = hi - lo;
    Ok(img.map(|v| ((v - lo) / range).max(T::zero()).min(T::one())))
}
