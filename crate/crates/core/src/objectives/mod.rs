//! Loss terms, their input gradients, and quality metrics.
//!
//! Every term is available as a plain value and as `(value, d value / d x)`
//! so the trainer can backpropagate the composite objective into the
//! network output.

mod composite;
mod gradient;
mod kspace_loss;
mod metrics;
mod pixel;
mod ssim;

pub use composite::{composite_loss, composite_loss_grad, LossBreakdown, LossPreset, LossWeights};
pub use gradient::{amplify_grad, grad_map, loss_grad_l1, loss_grad_l1_grad, SOBEL_MAX_RESPONSE};
pub use kspace_loss::{kspace_mse, kspace_mse_grad};
pub use metrics::{aggregate, psnr, Aggregate};
pub use pixel::{charbonnier, charbonnier_grad, pixel_l1, pixel_l1_grad};
pub use ssim::{gaussian_window, loss_ssim_l1, loss_ssim_l1_grad, ssim_index, ssim_map, SSIM_C1, SSIM_C2, SSIM_SIGMA, SSIM_WINDOW};
