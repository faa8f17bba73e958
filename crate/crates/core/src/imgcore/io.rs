//! Raw "MRIR" image container and 16-bit PGM export.
//!
//! Layout: magic `4D 52 49 52`, u32 LE width, u32 LE height, u8 dtype tag
//! (0 = f32 LE, 1 = f64 LE), then the row-major payload.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imgcore::Image2D;
use crate::scalar::Real;

pub const RAW_MAGIC: [u8; 4] = *b"MRIR";
pub const RAW_HEADER_LEN: usize = 13;

/// Payload precision of a raw image file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn tag(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Dtype::F32),
            1 => Some(Dtype::F64),
            _ => None,
        }
    }

    fn bytes(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    pub fn of<T: Real>() -> Self {
        Self::from_tag(T::DTYPE_TAG).expect("scalar dtype tag")
    }
}

pub fn encode_image<T: Real>(img: &Image2D<T>, dtype: Dtype) -> Vec<u8> {
    let mut out = Vec::with_capacity(RAW_HEADER_LEN + img.len() * dtype.bytes());
    out.extend_from_slice(&RAW_MAGIC);
    out.extend_from_slice(&(img.width() as u32).to_le_bytes());
    out.extend_from_slice(&(img.height() as u32).to_le_bytes());
    out.push(dtype.tag());
    for &v in img.data() {
        match dtype {
            Dtype::F32 => out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes()),
            Dtype::F64 => out.extend_from_slice(&v.as_f64().to_le_bytes()),
        }
    }
    out
}

pub fn decode_image<T: Real>(bytes: &[u8]) -> Result<Image2D<T>> {
    let format = |offset: usize, reason: &str| Error::Format {
        offset,
        reason: reason.to_string(),
    };
    if bytes.len() < 4 {
        return Err(format(bytes.len(), "truncated magic"));
    }
    if bytes[..4] != RAW_MAGIC {
        return Err(format(0, "bad magic, expected MRIR"));
    }
    if bytes.len() < RAW_HEADER_LEN {
        return Err(format(bytes.len(), "truncated header"));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let dtype = Dtype::from_tag(bytes[12]).ok_or_else(|| format(12, "unknown dtype tag"))?;
    let expected = RAW_HEADER_LEN + width * height * dtype.bytes();
    if bytes.len() < expected {
        return Err(format(bytes.len(), "truncated payload"));
    }
    if bytes.len() > expected {
        return Err(format(expected, "trailing bytes after payload"));
    }
    let data = bytes[RAW_HEADER_LEN..]
        .chunks_exact(dtype.bytes())
        .map(|chunk| match dtype {
            Dtype::F32 => T::lit(f32::from_le_bytes(chunk.try_into().unwrap()) as f64),
            Dtype::F64 => T::lit(f64::from_le_bytes(chunk.try_into().unwrap())),
        })
        .collect();
    Image2D::new(height, width, data)
}

/// Writes `img` in its own precision.
pub fn write_image<T: Real>(img: &Image2D<T>, path: impl AsRef<Path>) -> Result<()> {
    write_image_as(img, path, Dtype::of::<T>())
}

pub fn write_image_as<T: Real>(img: &Image2D<T>, path: impl AsRef<Path>, dtype: Dtype) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_image(img, dtype)).map_err(|e| Error::io(path, e))
}

pub fn read_image<T: Real>(path: impl AsRef<Path>) -> Result<Image2D<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

/// P5 graymap, maxval 65535, `round(clamp(v, 0, 1) * 65535)` big-endian.
pub fn write_pgm<T: Real>(img: &Image2D<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = format!("P5\n{} {}\n65535\n", img.width(), img.height()).into_bytes();
    for &v in img.data() {
        let q = (v.as_f64().clamp(0.0, 1.0) * 65535.0).round() as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_by_two_f32_is_header_plus_sixteen_bytes() {
        let img = Image2D::new(2, 2, vec![0.0f32, 1.0 / 3.0, 2.0 / 3.0, 1.0]).unwrap();
        let bytes = encode_image(&img, Dtype::F32);
        assert_eq!(bytes.len(), 13 + 16);
        assert_eq!(&bytes[..4], &[0x4D, 0x52, 0x49, 0x52]);
        assert_eq!(bytes[12], 0);
    }

    #[test]
    fn bad_magic_reports_offset_zero() {
        let img = Image2D::<f32>::zeros(2, 2);
        let mut bytes = encode_image(&img, Dtype::F32);
        bytes[1] = b'X';
        match decode_image::<f32>(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_is_reported() {
        let img = Image2D::<f64>::zeros(3, 3);
        let bytes = encode_image(&img, Dtype::F64);
        let cut = &bytes[..bytes.len() - 5];
        match decode_image::<f64>(cut) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, cut.len()),
            other => panic!("expected format error, got {other:?}"),
        }
        assert!(decode_image::<f64>(&bytes[..7]).is_err());
    }

    #[test]
    fn file_round_trip_and_pgm() {
        let dir = tempfile::tempdir().unwrap();
        let img = Image2D::<f64>::from_fn(5, 3, |r, c| (r as f64 * 0.1 + c as f64 * 0.013).sin());
        let path = dir.path().join("a.mrir");
        write_image(&img, &path).unwrap();
        assert_eq!(read_image::<f64>(&path).unwrap(), img);

        let pgm = dir.path().join("a.pgm");
        write_pgm(&img, &pgm).unwrap();
        let bytes = std::fs::read(&pgm).unwrap();
        let header = b"P5\n3 5\n65535\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len(), header.len() + 2 * 15);
        let first = u16::from_be_bytes([bytes[header.len()], bytes[header.len() + 1]]);
        assert_eq!(first, 0);
    }

    proptest! {
        #[test]
        fn raw_round_trip_is_bit_exact(h in 1usize..9, w in 1usize..9, seed in any::<u64>()) {
            let img64 = Image2D::<f64>::from_fn(h, w, |r, c| {
                let x = seed.wrapping_mul(31).wrapping_add((r * w + c) as u64) as f64;
                (x * 1e-3).sin() * 1e3
            });
            let back: Image2D<f64> = decode_image(&encode_image(&img64, Dtype::F64)).unwrap();
            prop_assert_eq!(&back, &img64);
            let img32: Image2D<f32> = img64.cast();
            let back32: Image2D<f32> = decode_image(&encode_image(&img32, Dtype::F32)).unwrap();
            prop_assert_eq!(back32, img32);
        }
    }
}
