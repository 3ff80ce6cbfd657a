//! Run manifest: enough provenance that identical inputs provably produce
//! identical reports. No wall-clock fields, so reruns are byte-identical.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<String>,
    pub config_hash: Option<String>,
    pub dataset_path: Option<String>,
    pub dataset_hash: Option<String>,
    pub seed: u64,
    pub tool_version: String,
    pub output_paths: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            config_path: None,
            config_hash: None,
            dataset_path: None,
            dataset_hash: None,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            output_paths: Vec::new(),
        }
    }

    pub fn with_config(mut self, path: &Path) -> Result<RunManifest> {
        self.config_path = Some(path.display().to_string());
        self.config_hash = Some(file_sha256(path)?);
        Ok(self)
    }

    pub fn with_dataset(mut self, path: &Path) -> Result<RunManifest> {
        self.dataset_path = Some(path.display().to_string());
        self.dataset_hash = Some(file_sha256(path)?);
        Ok(self)
    }

    pub fn record_output(&mut self, path: &Path) {
        self.output_paths.push(path.display().to_string());
    }

    /// Write `manifest.json` into `dir` and return its path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Internal(format!("manifest serialization: {e}")))?;
        std::fs::write(&path, json).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Ok(path)
    }
}

/// Hex SHA-256 of a file's bytes.
pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(crate::fusion::hex_digest(hasher))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips_and_hashes_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data.csv");
        std::fs::write(&data, "timestamp,a\n").unwrap();
        let mut manifest = RunManifest::new("train", 5).with_dataset(&data).unwrap();
        manifest.record_output(&dir.path().join("report.csv"));
        let path = manifest.write(dir.path()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let loaded: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(loaded, manifest);
        assert_eq!(loaded.dataset_hash.as_ref().unwrap().len(), 64);
    }
}
