//! Binary checkpoint container.
//!
//! All integers little-endian:
//!
//! ```text
//! "MRCK"            magic
//! u32               format version (1)
//! u8                dtype tag (0 = f32, 1 = f64)
//! u32               epoch
//! u32 + bytes       model config, JSON
//! u32 + bytes       run metadata, JSON
//! u32               parameter count P
//! P ×  u16 + bytes  name
//!      u8           rank
//!      rank × u32   dims
//!      values       product(dims) scalars
//! u8                optimizer present (0/1)
//! [u64              Adam step
//!  P × values       first moments
//!  P × values       second moments]
//! ```

use std::fs;
use std::path::Path;

use super::config::ModelConfig;
use super::graph::Param;
use super::network::Model;
use crate::error::{Error, Result};
use crate::imgcore::Dtype;
use crate::scalar::Real;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"MRCK";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Stored scalar type of an encoded checkpoint, read from the header alone.
pub fn checkpoint_dtype(bytes: &[u8]) -> Result<Dtype> {
    if bytes.len() < 9 || bytes[..4] != CHECKPOINT_MAGIC {
        return Err(Error::Format {
            offset: 0,
            reason: "bad magic, expected MRCK".into(),
        });
    }
    Dtype::from_tag(bytes[8]).ok_or_else(|| Error::Format {
        offset: 8,
        reason: format!("unknown dtype tag {}", bytes[8]),
    })
}

/// Adam moments, one array per parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState<T> {
    pub step: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<T> {
    pub epoch: u32,
    pub config: ModelConfig,
    pub meta: serde_json::Value,
    pub params: Vec<Param<T>>,
    pub optimizer: Option<OptimizerState<T>>,
}

impl<T: Real> Checkpoint<T> {
    pub fn from_model(model: &Model<T>, epoch: u32, meta: serde_json::Value, optimizer: Option<OptimizerState<T>>) -> Self {
        Self {
            epoch,
            config: model.config().clone(),
            meta,
            params: model.params().to_vec(),
            optimizer,
        }
    }

    pub fn model(&self) -> Result<Model<T>> {
        Model::from_params(&self.config, self.params.clone())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.push(T::DTYPE_TAG);
        out.extend_from_slice(&self.epoch.to_le_bytes());
        for json in [
            serde_json::to_vec(&self.config).expect("config serializes"),
            serde_json::to_vec(&self.meta).expect("meta serializes"),
        ] {
            out.extend_from_slice(&(json.len() as u32).to_le_bytes());
            out.extend_from_slice(&json);
        }
        out.extend_from_slice(&(self.params.len() as u32).to_le_bytes());
        for p in &self.params {
            out.extend_from_slice(&(p.name.len() as u16).to_le_bytes());
            out.extend_from_slice(p.name.as_bytes());
            out.push(p.shape.len() as u8);
            for &d in &p.shape {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            p.data.iter().for_each(|v| v.push_le(&mut out));
        }
        match &self.optimizer {
            None => out.push(0),
            Some(opt) => {
                out.push(1);
                out.extend_from_slice(&opt.step.to_le_bytes());
                for arrays in [&opt.m, &opt.v] {
                    arrays.iter().flatten().for_each(|v| v.push_le(&mut out));
                }
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(r.error_at(0, "bad magic, expected MRCK"));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(r.error_at(4, &format!("unsupported version {version}")));
        }
        let tag = r.u8()?;
        if tag != T::DTYPE_TAG {
            return Err(r.error_at(8, &format!("dtype tag {tag} does not match requested tag {}", T::DTYPE_TAG)));
        }
        let epoch = r.u32()?;
        let config: ModelConfig = r.json()?;
        let meta: serde_json::Value = r.json()?;
        let n = r.u32()? as usize;
        let mut params = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            let len = r.u16()? as usize;
            let at = r.pos;
            let name = String::from_utf8(r.take(len)?.to_vec()).map_err(|_| r.error_at(at, "name is not UTF-8"))?;
            let rank = r.u8()? as usize;
            let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let data = r.values::<T>(shape.iter().product())?;
            params.push(Param { name, shape, data });
        }
        let optimizer = match r.u8()? {
            0 => None,
            1 => {
                let step = r.u64()?;
                let mut moments = [Vec::new(), Vec::new()];
                for arrays in &mut moments {
                    for p in &params {
                        arrays.push(r.values::<T>(p.data.len())?);
                    }
                }
                let [m, v] = moments;
                Some(OptimizerState { step, m, v })
            }
            flag => return Err(r.error_at(r.pos - 1, &format!("optimizer flag {flag}"))),
        };
        if r.pos != bytes.len() {
            return Err(r.error_at(r.pos, "trailing bytes"));
        }
        Ok(Self {
            epoch,
            config,
            meta,
            params,
            optimizer,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn error_at(&self, offset: usize, reason: &str) -> Error {
        Error::Format {
            offset,
            reason: reason.to_string(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.error_at(self.bytes.len(), "truncated checkpoint"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn json<J: serde::de::DeserializeOwned>(&mut self) -> Result<J> {
        let len = self.u32()? as usize;
        let at = self.pos;
        let raw = self.take(len)?;
        serde_json::from_slice(raw).map_err(|e| self.error_at(at, &format!("invalid JSON: {e}")))
    }

    fn values<T: Real>(&mut self, n: usize) -> Result<Vec<T>> {
        let raw = self.take(n.checked_mul(T::BYTES).ok_or_else(|| self.error_at(self.pos, "size overflow"))?)?;
        Ok(raw.chunks_exact(T::BYTES).map(T::from_le).collect())
    }
}
