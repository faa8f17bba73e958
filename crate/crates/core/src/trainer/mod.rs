//! Subject splits, the optimization loop, checkpoints and evaluation.

mod adam;
mod data;
mod eval;
mod schedule;
mod split;
mod train;

pub use adam::Adam;
pub use data::{load_pairs, Pair};
pub use eval::{evaluate, input_baseline, restore, summarize, EvalOptions, EvalReport, ImageRecord};
pub use schedule::{lr_at, Precision, TrainConfig};
pub use split::{split_subjects, SplitCounts};
pub use train::{resume, train, EpochRecord, RunLog, TrainOptions, TrainOutcome};
