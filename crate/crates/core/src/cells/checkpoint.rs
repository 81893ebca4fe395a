//! Model checkpoint container.
//!
//! Layout, all integers little-endian:
//!
//! | bytes | content                                   |
//! |-------|-------------------------------------------|
//! | 8     | magic `STEPCKPT`                          |
//! | 4     | format version (`u32`, currently 1)       |
//! | 8     | header length `L` (`u64`)                 |
//! | L     | UTF-8 JSON header ([`CheckpointMeta`])    |
//! | …     | each tensor's `rows·cols` `f64` values, row-major, in header order |

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelParams, ModelShape, Variant, TENSOR_NAMES};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

const MAGIC: &[u8; 8] = b"STEPCKPT";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMeta {
    pub variant: Variant,
    pub d_x: usize,
    pub d_h: usize,
    pub d: usize,
    #[serde(rename = "K")]
    pub order: usize,
    pub kernel: usize,
    pub seed: u64,
    /// Raw event ID of each class; index 0 is the no-event class.
    pub vocabulary: Vec<u64>,
    pub tensors: Vec<TensorEntry>,
}

/// Parameters plus the vocabulary they were trained against.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub vocabulary: Vec<u64>,
}

pub fn save_checkpoint(path: &Path, params: &ModelParams, vocabulary: &[u64]) -> Result<()> {
    let bytes = encode(params, vocabulary)?;
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|msg| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: msg,
    })
}

fn encode(params: &ModelParams, vocabulary: &[u64]) -> Result<Vec<u8>> {
    let shape = params.shape();
    let meta = CheckpointMeta {
        variant: shape.variant,
        d_x: shape.d_x,
        d_h: shape.d_h,
        d: shape.d,
        order: shape.order,
        kernel: shape.kernel,
        seed: params.seed(),
        vocabulary: vocabulary.to_vec(),
        tensors: params
            .tensors()
            .map(|(name, m)| TensorEntry {
                name: name.to_string(),
                rows: m.rows(),
                cols: m.cols(),
            })
            .collect(),
    };
    let header = serde_json::to_vec(&meta).map_err(|e| Error::invalid(e.to_string()))?;
    let payload: usize = params.tensors().map(|(_, m)| m.len() * 8).sum();
    let mut out = Vec::with_capacity(20 + header.len() + payload);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for (_, m) in params.tensors() {
        for v in m.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

fn decode(bytes: &[u8]) -> std::result::Result<Checkpoint, String> {
    if bytes.len() < 20 || &bytes[..8] != MAGIC {
        return Err("not a checkpoint file (bad magic)".into());
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(format!("unsupported checkpoint version {version}"));
    }
    let header_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let header_end = 20usize
        .checked_add(header_len)
        .filter(|&e| e <= bytes.len())
        .ok_or("truncated header")?;
    let meta: CheckpointMeta =
        serde_json::from_slice(&bytes[20..header_end]).map_err(|e| format!("header: {e}"))?;
    let names: Vec<&str> = meta.tensors.iter().map(|t| t.name.as_str()).collect();
    if names != TENSOR_NAMES {
        return Err(format!("unexpected tensor list {names:?}"));
    }

    let mut offset = header_end;
    let mut tensors = Vec::with_capacity(meta.tensors.len());
    for entry in &meta.tensors {
        let count = entry.rows * entry.cols;
        let end = offset + count * 8;
        if end > bytes.len() {
            return Err(format!("truncated data for tensor {}", entry.name));
        }
        let data = bytes[offset..end]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        tensors.push(Matrix::new(entry.rows, entry.cols, data).map_err(|e| e.to_string())?);
        offset = end;
    }
    if offset != bytes.len() {
        return Err(format!("{} trailing bytes", bytes.len() - offset));
    }
    let shape = ModelShape {
        variant: meta.variant,
        d_x: meta.d_x,
        d_h: meta.d_h,
        d: meta.d,
        order: meta.order,
        kernel: meta.kernel,
    };
    if meta.vocabulary.len() != meta.d {
        return Err(format!(
            "vocabulary has {} entries but d = {}",
            meta.vocabulary.len(),
            meta.d
        ));
    }
    let params = ModelParams::from_tensors(shape, meta.seed, tensors).map_err(|e| e.to_string())?;
    Ok(Checkpoint {
        params,
        vocabulary: meta.vocabulary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::init_params;

    #[test]
    fn round_trip_is_exact() {
        let shape = ModelShape::new(Variant::Step, 4, 6, 4, 3);
        let params = init_params(shape, 17).unwrap();
        let vocab = vec![0, 3, 9, 12];
        let bytes = encode(&params, &vocab).unwrap();
        let back = decode(&bytes).unwrap();
        assert_eq!(back.params, params);
        assert_eq!(back.vocabulary, vocab);
        assert_eq!(&bytes[..8], b"STEPCKPT");
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let params = init_params(ModelShape::new(Variant::Lstm, 2, 3, 2, 1), 1).unwrap();
        let bytes = encode(&params, &[0, 5]).unwrap();
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(decode(&extra).is_err());
    }
}
