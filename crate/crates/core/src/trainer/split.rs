use rand::seq::SliceRandom;

use crate::degrade::Role;
use crate::error::{Error, Result};
use crate::rng;

/// Number of subjects per role.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitCounts {
    /// The 28-subject clinical split.
    pub const CLINICAL: SplitCounts = SplitCounts {
        train: 21,
        val: 4,
        test: 3,
    };

    pub fn new(train: usize, val: usize, test: usize) -> Self {
        Self { train, val, test }
    }

    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }

    /// 21:4:3 proportions for `n` subjects; validation and test round down,
    /// the remainder goes to training.
    pub fn scaled(n: usize) -> Self {
        let base = Self::CLINICAL;
        let val = n * base.val / base.total();
        let test = n * base.test / base.total();
        Self {
            train: n - val - test,
            val,
            test,
        }
    }
}

/// Seeded permutation of subjects: first `train`, then `val`, then `test`.
/// Returns one role per input id, aligned with `subject_ids`.
pub fn split_subjects(subject_ids: &[String], counts: SplitCounts, seed: u64) -> Result<Vec<Role>> {
    if counts.total() != subject_ids.len() {
        return Err(Error::Split(format!(
            "{} subjects but split sums to {}",
            subject_ids.len(),
            counts.total()
        )));
    }
    let mut unique = subject_ids.to_vec();
    unique.sort();
    unique.dedup();
    if unique.len() != subject_ids.len() {
        return Err(Error::Split("duplicate subject ids".into()));
    }
    let mut order: Vec<usize> = (0..subject_ids.len()).collect();
    order.shuffle(&mut rng::stream(seed, &[rng::label("subject-split")]));
    let mut roles = vec![Role::Train; subject_ids.len()];
    for (rank, &idx) in order.iter().enumerate() {
        roles[idx] = if rank < counts.train {
            Role::Train
        } else if rank < counts.train + counts.val {
            Role::Val
        } else {
            Role::Test
        };
    }
    Ok(roles)
}
