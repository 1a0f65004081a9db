//! JSON checkpoints. Context-weight rows that are entirely zero are
//! omitted; every other array is stored densely. Floats survive the
//! round trip bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::{PolicyConfig, PolicyParams};
use super::vocab::Vocab;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("checkpoint format {found}, expected {FORMAT_VERSION}")]
    Format { found: u32 },
    #[error("vocabulary hash mismatch: checkpoint {found}, build {expected}")]
    Vocab { found: String, expected: String },
    #[error("checkpoint shape mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub vocab_hash: String,
    pub vocab_size: usize,
    pub config: PolicyConfig,
    pub params_version: u64,
    /// Environment steps consumed when the checkpoint was written.
    pub env_step: u64,
    /// Outer iterations completed.
    pub iteration: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SparseRow {
    row: usize,
    values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CheckpointFile {
    header: CheckpointHeader,
    embeddings: Vec<f64>,
    pointers: Vec<f64>,
    value_weights: Vec<f64>,
    weight_rows: Vec<SparseRow>,
}

pub fn to_json(params: &PolicyParams, env_step: u64, iteration: u64) -> String {
    let v = params.vocab_size;
    let weight_rows = params
        .weights
        .chunks(v)
        .enumerate()
        .filter(|(_, r)| r.iter().any(|&x| x != 0.0))
        .map(|(row, r)| SparseRow {
            row,
            values: r.to_vec(),
        })
        .collect();
    let file = CheckpointFile {
        header: CheckpointHeader {
            format_version: FORMAT_VERSION,
            vocab_hash: Vocab::global().hash(),
            vocab_size: v,
            config: params.config.clone(),
            params_version: params.version,
            env_step,
            iteration,
        },
        embeddings: params.embeddings.clone(),
        pointers: params.pointers.clone(),
        value_weights: params.value_weights.clone(),
        weight_rows,
    };
    serde_json::to_string(&file).expect("checkpoint serializes")
}

pub fn from_json(text: &str) -> Result<(PolicyParams, CheckpointHeader), CheckpointError> {
    let file: CheckpointFile = serde_json::from_str(text)?;
    let h = file.header;
    if h.format_version != FORMAT_VERSION {
        return Err(CheckpointError::Format {
            found: h.format_version,
        });
    }
    let expected = Vocab::global().hash();
    if h.vocab_hash != expected || h.vocab_size != Vocab::global().len() {
        return Err(CheckpointError::Vocab {
            found: h.vocab_hash,
            expected,
        });
    }
    let mut params = PolicyParams::init(h.config.clone(), 0);
    let shape = |what: &str, got: usize, want: usize| {
        if got == want {
            Ok(())
        } else {
            Err(CheckpointError::Shape(format!("{what}: {got} != {want}")))
        }
    };
    shape("embeddings", file.embeddings.len(), params.embeddings.len())?;
    shape("pointers", file.pointers.len(), params.pointers.len())?;
    shape("value_weights", file.value_weights.len(), params.value_weights.len())?;
    params.embeddings = file.embeddings;
    params.pointers = file.pointers;
    params.value_weights = file.value_weights;
    let v = params.vocab_size;
    for r in file.weight_rows {
        if r.row >= h.config.buckets {
            return Err(CheckpointError::Shape(format!("row {} out of range", r.row)));
        }
        shape("weight row", r.values.len(), v)?;
        params.weights[r.row * v..(r.row + 1) * v].copy_from_slice(&r.values);
    }
    params.version = h.params_version;
    Ok((params, h))
}

pub fn save(path: &Path, params: &PolicyParams, env_step: u64, iteration: u64) -> Result<(), CheckpointError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, to_json(params, env_step, iteration))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<(PolicyParams, CheckpointHeader), CheckpointError> {
    from_json(&std::fs::read_to_string(path)?)
}
