//! Versioned JSON model checkpoints. Floats serialize in the shortest form
//! that parses back to the identical bit pattern, so a save/load/save cycle
//! is byte-stable.

use super::{MlpSpec, Params, StopReason};
use crate::error::{Error, Result};
use crate::timeseries::NormStats;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub best_step: usize,
    pub best_val_loss: f64,
    pub stopped_reason: StopReason,
    /// Target modality this model estimates (one id for isolated models,
    /// several for a unified model).
    pub targets: Vec<String>,
    /// Input column order expected at estimation time.
    pub predictor_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub spec: MlpSpec,
    pub params: Params,
    pub input_stats: NormStats,
    /// Present when the model was trained on normalized targets.
    pub target_stats: Option<NormStats>,
    pub meta: CheckpointMeta,
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(checkpoint)
        .map_err(|e| Error::Internal(format!("checkpoint serialization: {e}")))?;
    std::fs::write(path, json).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let checkpoint: Checkpoint = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    if checkpoint.version != CHECKPOINT_VERSION {
        return Err(Error::InvalidConfig(format!(
            "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
            checkpoint.version
        )));
    }
    if !checkpoint.params.matches_spec(&checkpoint.spec) {
        return Err(Error::InvalidConfig(
            "checkpoint parameter shapes do not match its spec".into(),
        ));
    }
    Ok(checkpoint)
}
