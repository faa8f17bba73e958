//! Synthetic head-like phantoms standing in for clinical slices.
//!
//! A phantom is a stack of ellipse composites (a bright rim, a head body and
//! several inner structures) under a smooth bias ramp, plus band-limited
//! texture noise inside the head. Inner structures are ellipsoids, so
//! neighbouring slices of one subject share anatomy but differ in extent.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{normalize_unit, Image2D};
use crate::kspace;
use crate::rng;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub seed: u64,
    pub size: usize,
    /// Inclusive range for the number of inner structures.
    pub n_ellipses: (usize, usize),
    /// Standard deviation of the texture field relative to the [0, 1] range.
    pub texture_amplitude: f64,
    /// Inverse width, in pixels, of the ellipse boundary transition.
    pub edge_sharpness: f64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            size: 96,
            n_ellipses: (4, 8),
            texture_amplitude: 0.04,
            edge_sharpness: 1.0,
        }
    }
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        if self.size < 16 {
            return Err(Error::InvalidParameter(format!("phantom size {} < 16", self.size)));
        }
        if self.n_ellipses.0 > self.n_ellipses.1 {
            return Err(Error::InvalidParameter("empty ellipse count range".into()));
        }
        if !(self.texture_amplitude >= 0.0 && self.texture_amplitude.is_finite()) {
            return Err(Error::InvalidParameter("texture_amplitude must be finite and >= 0".into()));
        }
        if !(self.edge_sharpness > 0.0 && self.edge_sharpness.is_finite()) {
            return Err(Error::InvalidParameter("edge_sharpness must be finite and > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct Ellipsoid {
    cy: f64,
    cx: f64,
    a: f64,
    b: f64,
    angle: f64,
    intensity: f64,
    z_center: f64,
    z_extent: f64,
}

impl Ellipsoid {
    /// In-plane scale of the cross-section at slice position `z`, if any.
    fn section(&self, z: f64) -> Option<f64> {
        let t = (z - self.z_center) / self.z_extent;
        let s2 = 1.0 - t * t;
        (s2 > 0.05).then(|| s2.sqrt())
    }

    /// Soft inside-indicator at pixel `(y, x)` in unit coordinates.
    fn coverage(&self, y: f64, x: f64, scale: f64, size: f64, sharpness: f64) -> f64 {
        let (a, b) = (self.a * scale, self.b * scale);
        let (dy, dx) = (y - self.cy, x - self.cx);
        let (s, c) = self.angle.sin_cos();
        let u = (dx * c + dy * s) / a;
        let v = (-dx * s + dy * c) / b;
        let rho = (u * u + v * v).sqrt();
        let dist_px = (1.0 - rho) * a.min(b) * size;
        (0.5 + dist_px * sharpness).clamp(0.0, 1.0)
    }
}

struct Anatomy {
    rim: Ellipsoid,
    head: Ellipsoid,
    inner: Vec<Ellipsoid>,
    ramp_angle: f64,
    ramp_gain: f64,
}

fn draw_anatomy(spec: &PhantomSpec) -> Anatomy {
    let mut r = rng::stream(spec.seed, &[rng::label("phantom-geometry")]);
    let cy = 0.5 + r.gen_range(-0.03..0.03);
    let cx = 0.5 + r.gen_range(-0.03..0.03);
    let a = r.gen_range(0.34..0.41);
    let b = r.gen_range(0.28..0.36);
    let angle = r.gen_range(-0.3..0.3);
    let rim = Ellipsoid {
        cy,
        cx,
        a: a + 0.035,
        b: b + 0.035,
        angle,
        intensity: r.gen_range(0.8..0.95),
        z_center: 0.0,
        z_extent: 2.0,
    };
    let head = Ellipsoid {
        intensity: r.gen_range(0.45..0.6),
        a,
        b,
        ..rim.clone()
    };
    let count = r.gen_range(spec.n_ellipses.0..=spec.n_ellipses.1);
    let inner = (0..count)
        .map(|_| {
            let ang = r.gen_range(0.0..std::f64::consts::TAU);
            let rad = r.gen_range(0.0..0.6f64).sqrt() * 0.8;
            Ellipsoid {
                cy: cy + rad * b * ang.sin(),
                cx: cx + rad * a * ang.cos(),
                a: r.gen_range(0.03..0.13),
                b: r.gen_range(0.03..0.13),
                angle: r.gen_range(0.0..std::f64::consts::PI),
                intensity: r.gen_range(0.05..1.0),
                z_center: r.gen_range(-0.4..0.4),
                z_extent: r.gen_range(0.5..1.2),
            }
        })
        .collect();
    Anatomy {
        rim,
        head,
        inner,
        ramp_angle: r.gen_range(0.0..std::f64::consts::TAU),
        ramp_gain: r.gen_range(0.1..0.2),
    }
}

/// Gaussian low-passed white noise with unit standard deviation.
fn band_limited_noise(size: usize, seed: u64, slice_label: u64) -> Image2D<f64> {
    let mut r = rng::stream(seed, &[rng::label("phantom-texture"), slice_label]);
    let white = Image2D::from_fn(size, size, |_, _| standard_normal(&mut r));
    let mut spec = kspace::fft2_ortho(&white);
    let cutoff = size as f64 / 10.0;
    for ky in 0..size {
        let fy = kspace::signed_freq(ky, size) as f64;
        for kx in 0..size {
            let fx = kspace::signed_freq(kx, size) as f64;
            let g = (-(fy * fy + fx * fx) / (2.0 * cutoff * cutoff)).exp();
            spec.data_mut()[ky * size + kx] *= g;
        }
    }
    let noise = kspace::ifft2_ortho(&spec).expect("standard layout").image;
    let mean = noise.mean();
    let var = noise.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / noise.len() as f64;
    let sd = var.sqrt().max(1e-12);
    noise.map(|v| (v - mean) / sd)
}

// Box-Muller
fn standard_normal<R: Rng>(r: &mut R) -> f64 {
    let u1: f64 = r.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = r.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn render(spec: &PhantomSpec, anatomy: &Anatomy, z: f64, texture_label: u64) -> Image2D<f64> {
    let n = spec.size;
    let size = n as f64;
    let sharp = spec.edge_sharpness;
    let texture = (spec.texture_amplitude > 0.0).then(|| band_limited_noise(n, spec.seed, texture_label));
    let (rs, rc) = anatomy.ramp_angle.sin_cos();
    let raw = Image2D::from_fn(n, n, |r, c| {
        let y = (r as f64 + 0.5) / size;
        let x = (c as f64 + 0.5) / size;
        let rim = anatomy.rim.coverage(y, x, 1.0, size, sharp);
        let head = anatomy.head.coverage(y, x, 1.0, size, sharp);
        let mut v = rim * anatomy.rim.intensity;
        v += head * (anatomy.head.intensity - v);
        for e in &anatomy.inner {
            if let Some(scale) = e.section(z) {
                let cov = e.coverage(y, x, scale, size, sharp);
                v += cov * (e.intensity - v);
            }
        }
        let ramp = 1.0 + anatomy.ramp_gain * ((x - 0.5) * rc + (y - 0.5) * rs);
        v *= 1.0 + (ramp - 1.0) * head;
        if let Some(t) = &texture {
            v += head * spec.texture_amplitude * t[(r, c)];
        }
        v.clamp(0.0, 1.0)
    });
    normalize_unit(&raw).expect("finite phantom")
}

/// Central slice of the subject described by `spec`.
pub fn make_phantom<T: Real>(spec: &PhantomSpec) -> Result<Image2D<T>> {
    spec.validate()?;
    let anatomy = draw_anatomy(spec);
    Ok(render(spec, &anatomy, 0.0, 0).cast())
}

/// `n_slices` evenly spaced slices through one subject.
pub fn make_subject<T: Real>(spec: &PhantomSpec, n_slices: usize) -> Result<Vec<Image2D<T>>> {
    spec.validate()?;
    if n_slices == 0 {
        return Err(Error::InvalidParameter("n_slices must be >= 1".into()));
    }
    let anatomy = draw_anatomy(spec);
    Ok((0..n_slices)
        .map(|i| {
            let z = -0.5 + (i as f64 + 0.5) / n_slices as f64;
            render(spec, &anatomy, z, i as u64 + 1).cast()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::grad_map;

    #[test]
    fn same_spec_is_bit_identical() {
        let spec = PhantomSpec {
            seed: 11,
            ..Default::default()
        };
        let a: Image2D<f64> = make_phantom(&spec).unwrap();
        let b: Image2D<f64> = make_phantom(&spec).unwrap();
        assert_eq!(a, b);
        let other: Image2D<f64> = make_phantom(&PhantomSpec { seed: 12, ..spec }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn shape_and_range() {
        let spec = PhantomSpec {
            seed: 3,
            size: 96,
            ..Default::default()
        };
        let img: Image2D<f32> = make_phantom(&spec).unwrap();
        assert_eq!(img.dims(), (96, 96));
        let (lo, hi) = img.min_max().unwrap();
        assert!(lo >= 0.0 && hi <= 1.0);
        assert_eq!((lo, hi), (0.0, 1.0));
    }

    #[test]
    fn untextured_gradient_energy_sits_on_boundaries() {
        let spec = PhantomSpec {
            seed: 5,
            size: 96,
            texture_amplitude: 0.0,
            ..Default::default()
        };
        let img: Image2D<f64> = make_phantom(&spec).unwrap();
        let g = grad_map(&img).unwrap();
        // Boundary pixels carry large responses; the smooth ramp alone is tiny.
        let total: f64 = g.data().iter().map(|v| v * v).sum();
        let strong: f64 = g.data().iter().filter(|&&v| v > 0.05).map(|v| v * v).sum();
        let strong_count = g.data().iter().filter(|&&v| v > 0.05).count();
        assert!(strong / total > 0.95, "{}", strong / total);
        assert!(strong_count < g.len() / 4);
    }

    #[test]
    fn subject_slices_differ_but_share_anatomy() {
        let spec = PhantomSpec {
            seed: 9,
            size: 32,
            ..Default::default()
        };
        let slices: Vec<Image2D<f64>> = make_subject(&spec, 4).unwrap();
        assert_eq!(slices.len(), 4);
        assert_ne!(slices[0], slices[1]);
        let again: Vec<Image2D<f64>> = make_subject(&spec, 4).unwrap();
        assert_eq!(slices, again);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = PhantomSpec {
            size: 8,
            ..Default::default()
        };
        assert!(make_phantom::<f32>(&bad).is_err());
        let bad = PhantomSpec {
            n_ellipses: (5, 2),
            ..Default::default()
        };
        assert!(make_phantom::<f32>(&bad).is_err());
    }
}
