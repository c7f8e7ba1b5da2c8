use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::Origin;
use crate::error::{Error, Result};

/// One cached completion, stored as a JSONL line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key: String,
    pub model: String,
    pub prompt_hash: String,
    pub origin: Origin,
    pub text: String,
    pub logprob: Option<f64>,
    pub timestamp: u64,
}

/// Append-only JSONL completion cache.
///
/// All records are loaded at open. Lookups take a read lock; inserts take the
/// writer mutex and append one line. The last record for a key wins.
pub struct CandidateCache {
    path: PathBuf,
    entries: RwLock<HashMap<String, CacheRecord>>,
    writer: Mutex<File>,
}

impl CandidateCache {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let mut entries = HashMap::new();
        if path.exists() {
            let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
            for (n, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(&path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheRecord>(&line) {
                    Ok(rec) => {
                        entries.insert(rec.key.clone(), rec);
                    }
                    // a torn final line from an interrupted run is skipped
                    Err(e) => log::warn!("{}:{}: skipping bad cache line: {e}", path.display(), n + 1),
                }
            }
        }
        let mut writer = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        let existing = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if existing.last().is_some_and(|&b| b != b'\n') {
            writer.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
        }
        Ok(CandidateCache {
            path,
            entries: RwLock::new(entries),
            writer: Mutex::new(writer),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<CacheRecord> {
        self.entries.read().expect("cache lock").get(key).cloned()
    }

    pub fn insert(&self, mut record: CacheRecord) -> Result<()> {
        if record.timestamp == 0 {
            record.timestamp = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
        }
        let line = serde_json::to_string(&record)?;
        {
            let mut w = self.writer.lock().expect("cache writer lock");
            writeln!(w, "{line}").map_err(|e| Error::io(&self.path, e))?;
            w.flush().map_err(|e| Error::io(&self.path, e))?;
        }
        self.entries
            .write()
            .expect("cache lock")
            .insert(record.key.clone(), record);
        Ok(())
    }
}
