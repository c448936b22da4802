//! Run manifest: config hash, stage timings and artifact checksums.
//!
//! The manifest doubles as the idempotence ledger: a stage whose recorded
//! config hash matches and whose artifacts still checksum correctly is
//! skipped on re-runs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct RunManifest {
    pub version: String,
    pub config_hash: String,
    pub stages: BTreeMap<String, StageRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub config_hash: String,
    pub seconds: f64,
    pub artifacts: Vec<ArtifactRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub path: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_checksum(path: &Path) -> Result<String> {
    let bytes =
        fs::read(path).with_context(|| format!("cannot hash {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

impl RunManifest {
    pub fn load_or_new(dir: &Path, config_hash: &str) -> Result<Self> {
        let path = dir.join("manifest.json");
        if path.exists() {
            let text = fs::read_to_string(&path)?;
            let mut m: RunManifest =
                serde_json::from_str(&text).context("manifest.json is corrupt")?;
            m.config_hash = config_hash.to_string();
            Ok(m)
        } else {
            Ok(RunManifest {
                version: env!("CARGO_PKG_VERSION").to_string(),
                config_hash: config_hash.to_string(),
                stages: BTreeMap::new(),
            })
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(dir.join("manifest.json"), text)?;
        Ok(())
    }

    /// True when the stage already ran under this config and its artifacts
    /// are still intact.
    pub fn stage_is_current(&self, dir: &Path, stage: &str, config_hash: &str) -> bool {
        let Some(record) = self.stages.get(stage) else {
            return false;
        };
        if record.config_hash != config_hash {
            return false;
        }
        record.artifacts.iter().all(|a| {
            let path = dir.join(&a.path);
            path.exists() && file_checksum(&path).map(|h| h == a.sha256).unwrap_or(false)
        })
    }

    pub fn record_stage(
        &mut self,
        dir: &Path,
        stage: &str,
        config_hash: &str,
        seconds: f64,
        artifacts: &[PathBuf],
    ) -> Result<()> {
        let mut records = Vec::with_capacity(artifacts.len());
        for path in artifacts {
            let rel = path
                .strip_prefix(dir)
                .map(|p| p.to_string_lossy().into_owned())
                .unwrap_or_else(|_| path.to_string_lossy().into_owned());
            records.push(ArtifactRecord { path: rel, sha256: file_checksum(path)? });
        }
        self.stages.insert(
            stage.to_string(),
            StageRecord { config_hash: config_hash.to_string(), seconds, artifacts: records },
        );
        self.save(dir)
    }
}

/// Exclusive ownership of an output directory for the duration of a run.
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output dir {}", dir.display()))?;
        let path = dir.join(".lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                bail!(
                    "output dir {} is locked by another run (remove {} if stale)",
                    dir.display(),
                    path.display()
                )
            }
            Err(e) => Err(e).context("cannot create lock file"),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
