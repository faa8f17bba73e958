//! MRI restoration: k-space degradation, motion artifacts, a residual
//! channel-attention network, refinement losses and training.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the precision used for training (`f32`) and checks (`f64`).

pub mod degrade;
pub mod error;
pub mod imgcore;
pub mod kspace;
pub mod model;
pub mod motion;
pub mod objectives;
pub mod rng;
pub mod scalar;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Image = imgcore::Image2D<f32>;
pub type Image64 = imgcore::Image2D<f64>;
pub type Spectrum = kspace::Spectrum2D<f32>;
pub type Spectrum64 = kspace::Spectrum2D<f64>;
pub type Model = model::Model<f32>;
pub type Model64 = model::Model<f64>;
