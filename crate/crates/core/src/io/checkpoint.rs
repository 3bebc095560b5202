//! `BFNO` checkpoint files.
//!
//! Layout: magic, version `u32 = 1`, the five architecture fields as `u32`
//! (`in_channels, width, n_layers, modes, projection_hidden`), the number of
//! arrays, then per array its name (`u32` length + UTF-8), a `u32` dtype tag
//! (0 = `f32`), rank, dimensions and payload. The last 32 bytes are the SHA-256 of everything before
//! them.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};
use crate::experiments::TrainedModel;
use crate::fno::{FnoConfig, FnoModel, ParamArray, TrainingLog};

use super::config::RunConfig;
use super::{put_f32s, put_u32, sidecar_path, to_json_bytes, to_u32, write_atomic, Reader};

const MAGIC: &[u8; 4] = b"BFNO";
const VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;
const DTYPE_F32: u32 = 0;

pub fn encode_checkpoint(model: &FnoModel<f32>) -> Result<Vec<u8>> {
    let c = model.config();
    let mut out = Vec::with_capacity(64 + 4 * model.parameter_count());
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    for v in [c.in_channels, c.width, c.n_layers, c.modes, c.projection_hidden] {
        put_u32(&mut out, to_u32(v, "config field")?);
    }
    put_u32(&mut out, to_u32(model.params().len(), "array count")?);
    for p in model.params() {
        put_u32(&mut out, to_u32(p.name.len(), "name length")?);
        out.extend_from_slice(p.name.as_bytes());
        put_u32(&mut out, DTYPE_F32);
        put_u32(&mut out, to_u32(p.shape.len(), "rank")?);
        for &d in &p.shape {
            put_u32(&mut out, to_u32(d, "dimension")?);
        }
        put_f32s(&mut out, p.data.iter().copied());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<FnoModel<f32>> {
    if bytes.len() < DIGEST_LEN {
        return Err(LabError::Format("checkpoint: truncated".into()));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(LabError::Checksum("checkpoint".into()));
    }
    let mut r = Reader::new(body, "checkpoint");
    r.magic(MAGIC, VERSION)?;
    let mut dims = [0usize; 5];
    for d in &mut dims {
        *d = r.u32()? as usize;
    }
    let config = FnoConfig {
        in_channels: dims[0],
        width: dims[1],
        n_layers: dims[2],
        modes: dims[3],
        projection_hidden: dims[4],
    };
    config.validate()?;
    let count = r.u32()? as usize;
    let mut params = Vec::new();
    for _ in 0..count {
        let len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| LabError::Format("checkpoint: array name is not UTF-8".into()))?
            .to_string();
        let dtype = r.u32()?;
        if dtype != DTYPE_F32 {
            return Err(LabError::Format(format!("checkpoint: array {name:?} has unsupported dtype {dtype}")));
        }
        let rank = r.u32()? as usize;
        let mut shape = Vec::new();
        for _ in 0..rank {
            shape.push(r.u32()? as usize);
        }
        let numel = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| LabError::Format(format!("checkpoint: array {name:?} too large")))?;
        let data = r.f32s(numel)?;
        params.push(ParamArray { name, shape, data });
    }
    r.finish()?;
    FnoModel::from_params(config, params)
}

/// Hex SHA-256 of the encoded checkpoint.
pub fn parameter_hash(model: &FnoModel<f32>) -> String {
    let bytes = encode_checkpoint(model).expect("model dimensions fit in u32");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_checkpoint(path: &Path, model: &FnoModel<f32>) -> Result<()> {
    write_atomic(path, &encode_checkpoint(model)?)
}

pub fn read_checkpoint(path: &Path) -> Result<FnoModel<f32>> {
    decode_checkpoint(&std::fs::read(path)?)
}

/// Sidecar `<checkpoint>.json` describing how a checkpoint was trained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointInfo {
    pub label: String,
    pub train_dist: String,
    pub parameter_hash: String,
    pub final_holdout_rel_l2: Option<f64>,
    pub run: RunConfig,
}

/// Writes the checkpoint and its sidecar.
pub fn write_trained(path: &Path, trained: &TrainedModel, train_dist: &str, run: &RunConfig) -> Result<()> {
    write_checkpoint(path, &trained.model)?;
    let info = CheckpointInfo {
        label: trained.label.clone(),
        train_dist: train_dist.to_string(),
        parameter_hash: parameter_hash(&trained.model),
        final_holdout_rel_l2: trained.log.final_holdout(),
        run: run.clone(),
    };
    write_atomic(&sidecar_path(path), &to_json_bytes(&info)?)
}

/// Loads a checkpoint; the label comes from the sidecar when present and
/// from the file stem otherwise. The training log is not restored.
pub fn read_trained(path: &Path) -> Result<TrainedModel> {
    let model = read_checkpoint(path)?;
    let side = sidecar_path(path);
    let label = if side.exists() {
        let info: CheckpointInfo = serde_json::from_slice(&std::fs::read(&side)?)?;
        if info.parameter_hash != parameter_hash(&model) {
            return Err(LabError::Checksum(format!("{} does not describe this checkpoint", side.display())));
        }
        info.label
    } else {
        path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into())
    };
    Ok(TrainedModel {
        label,
        model,
        log: TrainingLog::default(),
    })
}
