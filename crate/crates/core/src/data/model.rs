//! Binary model file.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes  "PCAEMODL"
//! version    u32
//! visible    u32      V ≥ 1
//! hidden     u32      H ≥ 1
//! kernel     u8       0 = xent, 1 = hamming, 2 = custom
//! mode       u8       0 = binary, 1 = real
//! reserved   u16      0
//! seed       u64
//! config     u32 length + UTF-8 bytes
//! weights    V·H f64, row-major (row v = weights of visible bit v)
//! ```

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::decoder::DecoderWeights;
use crate::encoder::EncodingMode;
use crate::error::{Error, Result};
use crate::kernel::KernelId;

pub const MODEL_MAGIC: &[u8; 8] = b"PCAEMODL";
pub const MODEL_VERSION: u32 = 1;

/// A trained model with the settings it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub version: u32,
    pub kernel_id: KernelId,
    pub encoding_mode: EncodingMode,
    pub seed: u64,
    /// Training configuration echo (TOML).
    pub config: String,
    pub weights: Array2<f64>,
}

impl ModelFile {
    pub fn new(
        weights: &DecoderWeights,
        encoding_mode: EncodingMode,
        seed: u64,
        config: impl Into<String>,
    ) -> Self {
        Self {
            version: MODEL_VERSION,
            kernel_id: weights.kernel_id(),
            encoding_mode,
            seed,
            config: config.into(),
            weights: weights.w().clone(),
        }
    }

    pub fn visible(&self) -> usize {
        self.weights.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.weights.ncols()
    }

    pub fn decoder_weights(&self) -> Result<DecoderWeights> {
        DecoderWeights::new(self.weights.clone(), self.kernel_id)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(40 + self.config.len() + 8 * self.weights.len());
        out.extend_from_slice(MODEL_MAGIC);
        out.extend(self.version.to_le_bytes());
        out.extend((self.visible() as u32).to_le_bytes());
        out.extend((self.hidden() as u32).to_le_bytes());
        out.push(self.kernel_id.tag());
        out.push(self.encoding_mode.tag());
        out.extend(0u16.to_le_bytes());
        out.extend(self.seed.to_le_bytes());
        out.extend((self.config.len() as u32).to_le_bytes());
        out.extend(self.config.as_bytes());
        for v in self.weights.iter() {
            out.extend(v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(8)? != MODEL_MAGIC {
            return Err(Error::CorruptModel("bad magic".into()));
        }
        let version = cur.u32()?;
        if version != MODEL_VERSION {
            return Err(Error::VersionMismatch {
                expected: MODEL_VERSION,
                found: version,
            });
        }
        let v = cur.u32()? as usize;
        let h = cur.u32()? as usize;
        if v == 0 || h == 0 {
            return Err(Error::CorruptModel(format!("zero dimension in header (V={v}, H={h})")));
        }
        let kernel_tag = cur.take(1)?[0];
        let kernel_id = KernelId::from_tag(kernel_tag)
            .ok_or_else(|| Error::CorruptModel(format!("unknown kernel tag {kernel_tag}")))?;
        let mode_tag = cur.take(1)?[0];
        let encoding_mode = EncodingMode::from_tag(mode_tag)
            .ok_or_else(|| Error::CorruptModel(format!("unknown encoding mode tag {mode_tag}")))?;
        cur.take(2)?;
        let seed = u64::from_le_bytes(cur.take(8)?.try_into().unwrap());
        let config_len = cur.u32()? as usize;
        let config = std::str::from_utf8(cur.take(config_len)?)
            .map_err(|_| Error::CorruptModel("configuration echo is not UTF-8".into()))?
            .to_string();
        let count = v
            .checked_mul(h)
            .ok_or_else(|| Error::CorruptModel("dimensions overflow".into()))?;
        let payload = cur.take(count.checked_mul(8).ok_or_else(|| Error::CorruptModel("dimensions overflow".into()))?)?;
        if cur.pos != bytes.len() {
            return Err(Error::CorruptModel(format!(
                "{} trailing bytes after weights",
                bytes.len() - cur.pos
            )));
        }
        let weights: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::CorruptModel("non-finite weight".into()));
        }
        Ok(Self {
            version,
            kernel_id,
            encoding_mode,
            seed,
            config,
            weights: Array2::from_shape_vec((v, h), weights).expect("length checked"),
        })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::CorruptModel(format!("truncated at byte {}", self.bytes.len())))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn save_model(model: &ModelFile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    ModelFile::from_bytes(&bytes)
}
