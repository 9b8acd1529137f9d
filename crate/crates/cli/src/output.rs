//! Output files and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub path: String,
    pub sha256: String,
    pub rows_loaded: usize,
    pub rows_skipped: usize,
    pub users_seen: usize,
    pub users_retained: usize,
    pub window_start: String,
    pub hours: usize,
}

/// Manifest entry for one subcommand run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub settings: serde_json::Value,
    pub seed: u64,
    pub dataset: Option<DatasetInfo>,
    /// File name to sha256 of its contents.
    pub outputs: BTreeMap<String, String>,
    pub row_failures: usize,
    pub notes: Vec<String>,
}

/// `manifest.json`: one record per subcommand last run in the directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub runs: BTreeMap<String, RunRecord>,
}

pub const MANIFEST: &str = "manifest.json";

/// Collects written files so the manifest can list their digests.
pub struct OutputDir {
    dir: PathBuf,
    written: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<OutputDir> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            written: BTreeMap::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Merges this run into `manifest.json`, replacing any earlier record
    /// for the same subcommand.
    pub fn finish(self, subcommand: &str, mut record: RunRecord) -> Result<()> {
        record.outputs = self.written;
        let path = self.dir.join(MANIFEST);
        let mut manifest = match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice::<Manifest>(&bytes).unwrap_or_else(|_| fresh()),
            Err(_) => fresh(),
        };
        manifest.tool = env!("CARGO_PKG_NAME").into();
        manifest.version = env!("CARGO_PKG_VERSION").into();
        manifest.runs.insert(subcommand.to_string(), record);
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))
    }
}

fn fresh() -> Manifest {
    Manifest {
        tool: String::new(),
        version: String::new(),
        runs: BTreeMap::new(),
    }
}
