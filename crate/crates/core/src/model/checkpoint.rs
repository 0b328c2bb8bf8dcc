//! Binary parameter checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes  "ETHCKPT\0"
//! version    u32      1
//! header_len u32      byte length of the JSON header
//! header     UTF-8 JSON {"model": ModelConfig, "seed": u64, "epoch": u64,
//!                        "parameters": [{"name": str, "shape": [usize]}]}
//! values     f64 LE   every parameter's values, in header order
//! ```
//!
//! Values are stored as raw IEEE-754 bits, so a save/load cycle is exact.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelConfig, ModelError, Result, TransformerRegressor};

const MAGIC: &[u8; 8] = b"ETHCKPT\0";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ParameterEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    model: ModelConfig,
    seed: u64,
    epoch: u64,
    parameters: Vec<ParameterEntry>,
}

#[derive(Debug)]
pub struct Checkpoint {
    pub model: TransformerRegressor,
    pub seed: u64,
    pub epoch: u64,
}

fn bad(msg: impl Into<String>) -> ModelError {
    ModelError::Checkpoint(msg.into())
}

pub fn write_checkpoint<W: Write>(
    out: &mut W,
    model: &TransformerRegressor,
    seed: u64,
    epoch: u64,
) -> Result<()> {
    let named = model.named_parameters();
    let header = Header {
        model: model.config().clone(),
        seed,
        epoch,
        parameters: named
            .iter()
            .map(|(name, t)| ParameterEntry {
                name: name.clone(),
                shape: t.shape().to_vec(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| bad(e.to_string()))?;
    let len = u32::try_from(json.len()).map_err(|_| bad("header too large"))?;
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&len.to_le_bytes())?;
    out.write_all(&json)?;
    for (_, t) in &named {
        for v in t.data().iter() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(input: &mut R) -> Result<Checkpoint> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("not a checkpoint file"));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    input.read_exact(&mut word)?;
    let mut json = vec![0u8; u32::from_le_bytes(word) as usize];
    input.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json).map_err(|e| bad(e.to_string()))?;

    let model = TransformerRegressor::new(header.model.clone(), header.seed)?;
    let named = model.named_parameters();
    if named.len() != header.parameters.len() {
        return Err(bad(format!(
            "{} parameters stored, configuration has {}",
            header.parameters.len(),
            named.len()
        )));
    }
    for ((name, t), entry) in named.iter().zip(&header.parameters) {
        if *name != entry.name || t.shape() != entry.shape.as_slice() {
            return Err(bad(format!(
                "parameter {} does not match {name}",
                entry.name
            )));
        }
        let mut buf = [0u8; 8];
        let mut data = t.data_mut();
        for v in data.iter_mut() {
            input.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
    }
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(bad(format!("{} trailing bytes", rest.len())));
    }
    Ok(Checkpoint {
        model,
        seed: header.seed,
        epoch: header.epoch,
    })
}

pub fn save_checkpoint(
    path: &Path,
    model: &TransformerRegressor,
    seed: u64,
    epoch: u64,
) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, model, seed, epoch)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path)?;
    read_checkpoint(&mut bytes.as_slice())
}
