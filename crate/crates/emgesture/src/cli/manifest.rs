//! Run manifest: the configuration snapshot plus the files each stage
//! produced. Re-running any stage with the manifest's config reproduces
//! its outputs byte for byte.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub outputs: Vec<PathBuf>,
    pub completed_unix: u64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PipelineManifest {
    pub run_id: String,
    pub created_unix: u64,
    pub config: PipelineConfig,
    pub stages: Vec<StageRecord>,
}

impl PipelineManifest {
    pub fn new(config: PipelineConfig) -> Self {
        let run_id = format!("run-{:016x}", fnv1a(config.to_toml_string().as_bytes()));
        Self {
            run_id,
            created_unix: unix_now(),
            config,
            stages: Vec::new(),
        }
    }

    pub fn record_stage(&mut self, name: &str, outputs: Vec<PathBuf>) {
        self.stages.push(StageRecord {
            name: name.to_string(),
            outputs,
            completed_unix: unix_now(),
        });
    }

    /// Every referenced output must exist once the run is complete.
    pub fn finalize(&self) -> Result<()> {
        for stage in &self.stages {
            for path in &stage.outputs {
                if !path.exists() {
                    return Err(Error::MissingFile(path.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<PipelineManifest> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}
