use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Super-resolution: output is `sr_factor` times the input size.
    Sr,
    /// Motion-artifact reduction: output has the input size.
    Mar,
}

/// Where the ×2 upsamplers sit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// All upsamplers after the last stage.
    Post,
    /// One upsampler at the end of each stage.
    Progressive,
}

macro_rules! text_enum {
    ($ty:ty, $($variant:path => $name:literal),+) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self {
                    $($variant => $name,)+
                })
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($variant),)+
                    other => Err(Error::Config(format!(
                        "unknown {} {other:?}",
                        stringify!($ty).to_lowercase()
                    ))),
                }
            }
        }
    };
}

text_enum!(Task, Task::Sr => "sr", Task::Mar => "mar");
text_enum!(Scheme, Scheme::Post => "post", Scheme::Progressive => "progressive");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub task: Task,
    pub scheme: Scheme,
    /// 2 or 4 for SR, 1 for MAR.
    pub sr_factor: usize,
    pub n_rg_per_stage: usize,
    pub n_rcab: usize,
    pub n_feats: usize,
    pub reduction: usize,
    /// Long skip around each stage's residual groups.
    pub rir_skip: bool,
    /// MAR only: add the input image to the reconstruction.
    pub input_bypass: bool,
}

pub const KERNEL: usize = 3;

impl ModelConfig {
    /// Full-size network: 5 groups of 5 RCABs, 64 features, reduction 16.
    pub fn paper(task: Task, sr_factor: usize, scheme: Scheme) -> Self {
        Self {
            task,
            scheme,
            sr_factor,
            n_rg_per_stage: 5,
            n_rcab: 5,
            n_feats: 64,
            reduction: 16,
            rir_skip: true,
            input_bypass: false,
        }
    }

    /// Desk-scale network: 2 groups of 2 RCABs, 8 features, reduction 4.
    pub fn toy(task: Task, sr_factor: usize, scheme: Scheme) -> Self {
        Self {
            n_rg_per_stage: 2,
            n_rcab: 2,
            n_feats: 8,
            reduction: 4,
            ..Self::paper(task, sr_factor, scheme)
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.task, self.sr_factor) {
            (Task::Sr, 2 | 4) | (Task::Mar, 1) => {}
            (task, f) => return Err(Error::Config(format!("factor {f} is not valid for task {task}"))),
        }
        if self.n_rg_per_stage == 0 || self.n_rcab == 0 || self.n_feats == 0 || self.reduction == 0 {
            return Err(Error::Config("group, block, feature and reduction counts must be positive".into()));
        }
        if self.n_feats % self.reduction != 0 {
            return Err(Error::Config(format!(
                "n_feats {} is not divisible by reduction {}",
                self.n_feats, self.reduction
            )));
        }
        if self.input_bypass && self.task != Task::Mar {
            return Err(Error::Config("input bypass requires equal input and output sizes (MAR)".into()));
        }
        Ok(())
    }

    /// Number of residual-in-residual stages.
    pub fn n_stages(&self) -> usize {
        match (self.task, self.scheme, self.sr_factor) {
            (Task::Sr, Scheme::Progressive, 4) => 2,
            _ => 1,
        }
    }

    /// Number of ×2 sub-pixel upsamplers in the whole network.
    pub fn n_upsamplers(&self) -> usize {
        match self.task {
            Task::Sr => self.sr_factor.trailing_zeros() as usize,
            Task::Mar => 1,
        }
    }

    /// Output size for a given input size.
    pub fn output_dims(&self, height: usize, width: usize) -> Result<(usize, usize)> {
        match self.task {
            Task::Sr => Ok((height * self.sr_factor, width * self.sr_factor)),
            Task::Mar => {
                if height % 2 != 0 || width % 2 != 0 || height == 0 || width == 0 {
                    return Err(Error::Dimension(format!("MAR input {height}x{width} must have even, non-zero dims")));
                }
                Ok((height, width))
            }
        }
    }
}
