use std::path::Path;

use rayon::prelude::*;

use crate::degrade::{Manifest, Role};
use crate::error::Result;
use crate::imgcore::{read_image, Image2D};
use crate::scalar::Real;

/// One low/high quality pair loaded from a manifest.
#[derive(Clone, Debug, PartialEq)]
pub struct Pair<T> {
    pub id: String,
    pub subject: String,
    pub lq: Image2D<T>,
    pub hq: Image2D<T>,
}

/// Loads every pair of `role`, in manifest order. Paths resolve against
/// `root`, normally the manifest's directory.
pub fn load_pairs<T: Real>(manifest: &Manifest, root: &Path, role: Role) -> Result<Vec<Pair<T>>> {
    let records: Vec<_> = manifest.role(role).collect();
    records
        .par_iter()
        .map(|r| {
            Ok(Pair {
                id: r.pair_id.clone(),
                subject: r.subject_id.clone(),
                lq: read_image(root.join(&r.lq_path))?,
                hq: read_image(root.join(&r.hq_path))?,
            })
        })
        .collect()
}
