//! Versioned binary weight container.
//!
//! Layout, all integers little-endian u32 unless noted:
//! magic `HINTCKPT` (8 bytes) | version | config byte length | config
//! JSON | parameter count | per parameter: name length, name bytes,
//! rank, one extent per axis, raw 32-bit little-endian float data.
//! Saving a loaded file reproduces it byte for byte.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use hint_core::{ParamSet, Scalar};

use crate::config::ModelConfig;
use crate::model::Model;

pub const MAGIC: &[u8; 8] = b"HINTCKPT";
pub const VERSION: u32 = 1;

// Caps against nonsense lengths in corrupt files.
const MAX_NAME: u32 = 1 << 16;
const MAX_RANK: u32 = 8;
const MAX_CONFIG: u32 = 1 << 20;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint io error: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}, expected {VERSION}")]
    UnsupportedVersion(u32),
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
}

/// A named weight blob as stored on disk.
pub struct NamedTensor<T: Scalar> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

fn write_u32<W: Write>(w: &mut W, v: u32) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

/// Serializes entries in the given order. Weights are stored as 32-bit
/// floats regardless of the in-memory scalar type.
pub fn save_entries<T: Scalar, W: Write>(
    w: &mut W,
    cfg: &ModelConfig,
    entries: &[NamedTensor<T>],
) -> Result<(), CheckpointError> {
    w.write_all(MAGIC)?;
    write_u32(w, VERSION)?;
    let cfg_json =
        serde_json::to_vec(cfg).map_err(|e| CheckpointError::Malformed(format!("config encode: {e}")))?;
    write_u32(w, cfg_json.len() as u32)?;
    w.write_all(&cfg_json)?;
    write_u32(w, entries.len() as u32)?;
    for e in entries {
        write_u32(w, e.name.len() as u32)?;
        w.write_all(e.name.as_bytes())?;
        write_u32(w, e.shape.len() as u32)?;
        for &d in &e.shape {
            write_u32(w, d as u32)?;
        }
        let mut buf = Vec::with_capacity(e.data.len() * 4);
        for &v in &e.data {
            buf.extend_from_slice(&(v.to_f64() as f32).to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn save<T: Scalar, W: Write>(
    w: &mut W,
    cfg: &ModelConfig,
    params: &ParamSet<T>,
) -> Result<(), CheckpointError> {
    let entries: Vec<NamedTensor<T>> = params
        .iter()
        .map(|p| NamedTensor { name: p.name().to_string(), shape: p.shape().to_vec(), data: p.tensor().to_vec() })
        .collect();
    save_entries(w, cfg, &entries)
}

pub fn load<T: Scalar, R: Read>(r: &mut R) -> Result<(ModelConfig, Vec<NamedTensor<T>>), CheckpointError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let cfg_len = read_u32(r)?;
    if cfg_len > MAX_CONFIG {
        return Err(CheckpointError::Malformed(format!("config length {cfg_len}")));
    }
    let mut cfg_json = vec![0u8; cfg_len as usize];
    r.read_exact(&mut cfg_json)?;
    let cfg: ModelConfig = serde_json::from_slice(&cfg_json)
        .map_err(|e| CheckpointError::Malformed(format!("config decode: {e}")))?;
    let count = read_u32(r)?;
    let mut entries = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let name_len = read_u32(r)?;
        if name_len > MAX_NAME {
            return Err(CheckpointError::Malformed(format!("name length {name_len}")));
        }
        let mut name = vec![0u8; name_len as usize];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|e| CheckpointError::Malformed(e.to_string()))?;
        let rank = read_u32(r)?;
        if rank > MAX_RANK {
            return Err(CheckpointError::Malformed(format!("rank {rank} of {name}")));
        }
        let mut shape = Vec::with_capacity(rank as usize);
        let mut numel = 1usize;
        for _ in 0..rank {
            let d = read_u32(r)? as usize;
            numel = numel
                .checked_mul(d)
                .ok_or_else(|| CheckpointError::Malformed(format!("extent overflow in {name}")))?;
            shape.push(d);
        }
        let mut buf = vec![0u8; numel * 4];
        r.read_exact(&mut buf)?;
        let data = buf
            .chunks_exact(4)
            .map(|c| T::from_f64(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
            .collect();
        entries.push(NamedTensor { name, shape, data });
    }
    Ok((cfg, entries))
}

pub fn save_model<T: Scalar>(path: &Path, model: &Model<T>) -> Result<(), CheckpointError> {
    let mut w = BufWriter::new(File::create(path)?);
    save(&mut w, model.config(), model.params())?;
    w.flush()?;
    Ok(())
}

/// Rebuilds the model from the stored config, then overwrites every
/// parameter with the stored values. Names and shapes must match the
/// rebuilt model exactly.
pub fn load_model<T: Scalar>(path: &Path) -> Result<Model<T>, CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);
    let (cfg, entries) = load::<T, _>(&mut r)?;
    let model =
        Model::build(&cfg, 0).map_err(|e| CheckpointError::Malformed(format!("stored config rejected: {e}")))?;
    if entries.len() != model.params().len() {
        return Err(CheckpointError::Malformed(format!(
            "{} stored parameters, model has {}",
            entries.len(),
            model.params().len()
        )));
    }
    for e in entries {
        let p = e.name.as_str();
        let param = model
            .params()
            .get(p)
            .ok_or_else(|| CheckpointError::Malformed(format!("unknown parameter {p}")))?;
        if param.shape() != e.shape.as_slice() {
            return Err(CheckpointError::Malformed(format!(
                "parameter {p} stored as {:?}, model wants {:?}",
                e.shape,
                param.shape()
            )));
        }
        param.tensor().modify(|d| d.copy_from_slice(&e.data));
    }
    Ok(model)
}
