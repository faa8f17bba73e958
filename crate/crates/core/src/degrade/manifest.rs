//! Tab-separated dataset index binding low/high quality pairs.
//!
//! One record per line:
//! `pair_id  subject_id  role  lq_path  hq_path  augmentation`, with paths
//! relative to the manifest file.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Val,
    Test,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Train, Role::Val, Role::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Train => "train",
            Role::Val => "val",
            Role::Test => "test",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Role::Train),
            "val" => Ok(Role::Val),
            "test" => Ok(Role::Test),
            _ => Err(Error::Manifest(format!("unknown role {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Augmentation {
    None,
    Rot90,
    Rot180,
    Rot270,
}

impl Augmentation {
    pub const ALL: [Augmentation; 4] = [
        Augmentation::None,
        Augmentation::Rot90,
        Augmentation::Rot180,
        Augmentation::Rot270,
    ];

    pub fn quarters(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Augmentation::None => "none",
            Augmentation::Rot90 => "rot90",
            Augmentation::Rot180 => "rot180",
            Augmentation::Rot270 => "rot270",
        }
    }
}

impl fmt::Display for Augmentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Augmentation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Augmentation::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Manifest(format!("unknown augmentation {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestRecord {
    pub pair_id: String,
    pub subject_id: String,
    pub role: Role,
    pub lq_path: PathBuf,
    pub hq_path: PathBuf,
    pub augmentation: Augmentation,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    pub records: Vec<ManifestRecord>,
}

impl Manifest {
    pub fn new(records: Vec<ManifestRecord>) -> Result<Self> {
        let m = Self { records };
        m.validate()?;
        Ok(m)
    }

    /// No subject may appear under two roles.
    pub fn validate(&self) -> Result<()> {
        let mut roles: BTreeMap<&str, Role> = BTreeMap::new();
        for rec in &self.records {
            for field in [&rec.pair_id, &rec.subject_id] {
                if field.is_empty() || field.contains(['\t', '\n']) {
                    return Err(Error::Manifest(format!("bad identifier {field:?}")));
                }
            }
            match roles.insert(&rec.subject_id, rec.role) {
                Some(prev) if prev != rec.role => {
                    return Err(Error::Manifest(format!(
                        "subject {} appears as both {prev} and {}",
                        rec.subject_id, rec.role
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn role(&self, role: Role) -> impl Iterator<Item = &ManifestRecord> {
        self.records.iter().filter(move |r| r.role == role)
    }

    /// Distinct subjects per role, in first-appearance order.
    pub fn subjects(&self, role: Role) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in self.role(role) {
            if !out.contains(&r.subject_id) {
                out.push(r.subject_id.clone());
            }
        }
        out
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                r.pair_id,
                r.subject_id,
                r.role,
                r.lq_path.display(),
                r.hq_path.display(),
                r.augmentation
            ));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 6 {
                return Err(Error::Manifest(format!(
                    "line {}: expected 6 tab-separated fields, got {}",
                    i + 1,
                    fields.len()
                )));
            }
            records.push(ManifestRecord {
                pair_id: fields[0].to_string(),
                subject_id: fields[1].to_string(),
                role: fields[2].parse()?,
                lq_path: PathBuf::from(fields[3]),
                hq_path: PathBuf::from(fields[4]),
                augmentation: fields[5].parse()?,
            });
        }
        Self::new(records)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}
