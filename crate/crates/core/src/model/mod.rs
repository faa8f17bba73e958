//! Residual channel-attention restoration networks (SR and MAR variants),
//! reverse-mode gradients, patch stitching and checkpoints.

mod checkpoint;
mod config;
mod graph;
mod network;
mod stitch;
mod tensor;

pub use checkpoint::{checkpoint_dtype, Checkpoint, OptimizerState, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{ModelConfig, Scheme, Task, KERNEL};
pub use graph::{ConvLayer, Eval, Exec, Param, Tape};
pub use network::{build_model, Model};
pub use stitch::{restore_tiled, stitch_patches};
pub use tensor::{conv2d_backward, conv2d_forward, pixel_shuffle, pixel_unshuffle, ConvShape, Tensor};
