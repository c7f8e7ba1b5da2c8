use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Git-style blob id (`blob <len>\0<bytes>`) using SHA-256, as in git's
/// SHA-256 object format.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("blob {}\0", bytes.len()).as_bytes());
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

pub fn file_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(blob_hash(&bytes))
}

/// Everything needed to re-run a command and check its outputs. Holds no
/// timestamps or absolute paths, so reruns produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub mock: bool,
    pub config_hash: String,
    /// Keyed by file name.
    pub inputs: BTreeMap<String, String>,
    pub decisions: BTreeMap<String, Value>,
    /// Keyed by path relative to the output directory.
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, mock: bool, config_hash: String) -> Self {
        Manifest {
            command: command.to_string(),
            mock,
            config_hash,
            inputs: BTreeMap::new(),
            decisions: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        self.inputs.insert(name, file_hash(path)?);
        Ok(())
    }

    pub fn output(&mut self, out_dir: &Path, path: &Path) -> Result<()> {
        let name = path
            .strip_prefix(out_dir)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/");
        self.outputs.insert(name, file_hash(path)?);
        Ok(())
    }

    pub fn decision(&mut self, key: &str, value: impl Into<Value>) {
        self.decisions.insert(key.to_string(), value.into());
    }

    /// Writes `manifest.<command>.json` into `out_dir`.
    pub fn write(&self, out_dir: &Path) -> Result<std::path::PathBuf> {
        let path = out_dir.join(format!("manifest.{}.json", self.command));
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
