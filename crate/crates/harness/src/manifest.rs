//! Run manifest: written at start, updated at finish or failure.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::{io_failure, Failure};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Running,
    Finished,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCount {
    pub name: String,
    pub samples: usize,
    /// Samples dropped because a marked point landed on a loop.
    pub discarded: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub core_version: String,
    pub harness_version: String,
    pub status: Status,
    pub started: u64,
    pub finished: Option<u64>,
    pub wall_seconds: Option<f64>,
    pub stages: Vec<StageCount>,
    pub acceptance_passed: Option<bool>,
    pub error: Option<String>,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl Manifest {
    pub fn start(experiment: String, config_hash: String, seed: u64) -> Self {
        Manifest {
            experiment,
            config_hash,
            seed,
            core_version: cle_core::VERSION.to_owned(),
            harness_version: env!("CARGO_PKG_VERSION").to_owned(),
            status: Status::Running,
            started: unix_now(),
            finished: None,
            wall_seconds: None,
            stages: Vec::new(),
            acceptance_passed: None,
            error: None,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), Failure> {
        write_json(&dir.join(MANIFEST_FILE), self)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| io_failure(path, e))?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| io_failure(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let s = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    serde_json::from_str(&s).map_err(|e| io_failure(path, e))
}
