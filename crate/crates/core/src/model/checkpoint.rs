//! Checkpoint persistence.
//!
//! Weights go to a little-endian binary container (`<stem>.weights`):
//! the 8-byte magic `GZIDWTS1`, a `u32` array count, then per array a `u64`
//! length followed by that many `f64` values. Arrays are the learnable
//! parameters followed by batch-norm running statistics, in network order.
//! Metadata goes to a JSON sidecar (`<stem>.json`) that carries the format
//! version, architecture, seed, fold, normalization statistics and the
//! SHA-256 of the weights file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::config::{hex_digest, ArchitectureConfig};
use crate::model::network::EmbeddingNet;
use crate::signal::NormalizationStats;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"GZIDWTS1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub format_version: u32,
    pub architecture: ArchitectureConfig,
    pub architecture_hash: String,
    pub seed: u64,
    pub fold_id: Option<usize>,
    pub normalization: NormalizationStats,
    pub weights_file: String,
    pub weights_sha256: String,
    pub window_len: usize,
    pub sampling_rate_hz: f64,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub net: EmbeddingNet,
    pub meta: CheckpointMeta,
}

impl Checkpoint {
    /// Fold tag used in file names, `F0`, `F1`, ...; `FULL` without a fold.
    pub fn tag(&self) -> String {
        fold_tag(self.meta.fold_id)
    }
}

pub fn fold_tag(fold: Option<usize>) -> String {
    match fold {
        Some(f) => format!("F{f}"),
        None => "FULL".to_string(),
    }
}

fn encode_weights(net: &EmbeddingNet) -> Vec<u8> {
    let arrays: Vec<&Vec<f64>> = net
        .params()
        .into_iter()
        .map(|p| &p.value)
        .chain(net.buffers())
        .collect();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(arrays.len() as u32).to_le_bytes());
    for a in arrays {
        out.extend_from_slice(&(a.len() as u64).to_le_bytes());
        for v in a {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn decode_weights(bytes: &[u8], net: &mut EmbeddingNet, path: &Path) -> Result<()> {
    let corrupt = |msg: &str| Error::Data(format!("{}: {msg}", path.display()));
    let mut cursor = bytes
        .strip_prefix(MAGIC.as_slice())
        .ok_or_else(|| corrupt("bad magic"))?;
    let mut take = |n: usize| -> Result<&[u8]> {
        if cursor.len() < n {
            return Err(corrupt("truncated"));
        }
        let (head, tail) = cursor.split_at(n);
        cursor = tail;
        Ok(head)
    };
    let count = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes")) as usize;
    let n_params = net.params().len();
    let n_buffers = net.buffers().len();
    if count != n_params + n_buffers {
        return Err(corrupt(&format!(
            "expected {} arrays, found {count}",
            n_params + n_buffers
        )));
    }
    let mut decoded = Vec::with_capacity(count);
    for _ in 0..count {
        let len = u64::from_le_bytes(take(8)?.try_into().expect("8 bytes")) as usize;
        let raw = take(len.checked_mul(8).ok_or_else(|| corrupt("length overflow"))?)?;
        decoded.push(
            raw.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect::<Vec<f64>>(),
        );
    }
    let (params, buffers) = decoded.split_at(n_params);
    for (dst, src) in net.params_mut().into_iter().zip(params) {
        if dst.value.len() != src.len() {
            return Err(corrupt("parameter array length mismatch"));
        }
        dst.value.copy_from_slice(src);
    }
    for (dst, src) in net.buffers_mut().into_iter().zip(buffers) {
        if dst.len() != src.len() {
            return Err(corrupt("buffer array length mismatch"));
        }
        dst.copy_from_slice(src);
    }
    Ok(())
}

/// Writes `<dir>/<stem>.weights` and `<dir>/<stem>.json`; returns the sidecar path.
#[allow(clippy::too_many_arguments)]
pub fn save_checkpoint(
    dir: &Path,
    stem: &str,
    net: &EmbeddingNet,
    seed: u64,
    fold_id: Option<usize>,
    normalization: NormalizationStats,
    window_len: usize,
    sampling_rate_hz: f64,
) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let bytes = encode_weights(net);
    let weights_file = format!("{stem}.weights");
    let weights_path = dir.join(&weights_file);
    fs::write(&weights_path, &bytes).map_err(|e| Error::io(&weights_path, e))?;
    let meta = CheckpointMeta {
        format_version: CHECKPOINT_FORMAT_VERSION,
        architecture: net.config().clone(),
        architecture_hash: net.config().content_hash(),
        seed,
        fold_id,
        normalization,
        weights_file,
        weights_sha256: hex_digest(&bytes),
        window_len,
        sampling_rate_hz,
    };
    let meta_path = dir.join(format!("{stem}.json"));
    let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    fs::write(&meta_path, json).map_err(|e| Error::io(&meta_path, e))?;
    Ok(meta_path)
}

/// Loads a checkpoint from its JSON sidecar, verifying the weights hash.
pub fn load_checkpoint(meta_path: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(meta_path).map_err(|e| Error::io(meta_path, e))?;
    let meta: CheckpointMeta = serde_json::from_str(&text)
        .map_err(|e| Error::Data(format!("{}: {e}", meta_path.display())))?;
    if meta.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(Error::Data(format!(
            "{}: unsupported checkpoint format version {}",
            meta_path.display(),
            meta.format_version
        )));
    }
    let weights_path = meta_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&meta.weights_file);
    let bytes = fs::read(&weights_path).map_err(|e| Error::io(&weights_path, e))?;
    if hex_digest(&bytes) != meta.weights_sha256 {
        return Err(Error::Data(format!(
            "{}: weights hash does not match metadata",
            weights_path.display()
        )));
    }
    let mut net = EmbeddingNet::new(meta.architecture.clone(), meta.seed)?;
    decode_weights(&bytes, &mut net, &weights_path)?;
    Ok(Checkpoint { net, meta })
}
