#![allow(dead_code)]

use std::path::Path;

use hqmri_core::degrade::{build_sr_dataset, Role, SrDatasetOptions, SrPairSpec, SubjectVolume};
use hqmri_core::imgcore::{make_subject, PhantomSpec};
use hqmri_core::motion::{build_mar_dataset, MarDatasetOptions, PlanRecord};
use hqmri_core::trainer::{load_pairs, Pair, SplitCounts};

pub fn corpus(n_subjects: usize, n_slices: usize, size: usize, seed: u64) -> Vec<SubjectVolume<f32>> {
    (0..n_subjects)
        .map(|i| SubjectVolume {
            id: format!("subj{i:02}"),
            slices: make_subject(
                &PhantomSpec {
                    seed: seed * 1000 + i as u64,
                    size,
                    ..PhantomSpec::default()
                },
                n_slices,
            )
            .unwrap(),
        })
        .collect()
}

pub struct Splits {
    pub train: Vec<Pair<f32>>,
    pub val: Vec<Pair<f32>>,
    pub test: Vec<Pair<f32>>,
}

pub fn sr_splits(volumes: &[SubjectVolume<f32>], spec: &SrPairSpec, seed: u64, dir: &Path) -> Splits {
    let options = SrDatasetOptions {
        roi: volumes[0].slices[0].height(),
        ..Default::default()
    };
    let manifest = build_sr_dataset(volumes, spec, SplitCounts::scaled(volumes.len()), seed, &options, dir).unwrap();
    Splits {
        train: load_pairs(&manifest, dir, Role::Train).unwrap(),
        val: load_pairs(&manifest, dir, Role::Val).unwrap(),
        test: load_pairs(&manifest, dir, Role::Test).unwrap(),
    }
}

pub fn mar_splits(volumes: &[SubjectVolume<f32>], seed: u64, dir: &Path) -> (Splits, Vec<PlanRecord>) {
    let options = MarDatasetOptions {
        roi: volumes[0].slices[0].height(),
        ..Default::default()
    };
    let (manifest, plans) = build_mar_dataset(volumes, SplitCounts::scaled(volumes.len()), seed, &options, dir).unwrap();
    (
        Splits {
            train: load_pairs(&manifest, dir, Role::Train).unwrap(),
            val: load_pairs(&manifest, dir, Role::Val).unwrap(),
            test: load_pairs(&manifest, dir, Role::Test).unwrap(),
        },
        plans,
    )
}
