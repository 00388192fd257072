//! The `run` subcommand: config in, manifest, results, summary and CSVs out.

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::{load_config, LoadedConfig};
use crate::emit::{emit, RESULTS_FILE, SUMMARY_FILE};
use crate::experiments::{execute, Cache};
use crate::manifest::{unix_now, write_json, Manifest, Status};
use crate::summary::Summary;
use crate::{io_failure, output_root, Failure};

pub const CONFIG_COPY: &str = "config.toml";

pub struct RunOutcome {
    pub dir: PathBuf,
    pub summary: Summary,
}

impl RunOutcome {
    /// Acceptance failures become `Failure::Acceptance`.
    pub fn into_result(self) -> Result<RunOutcome, Failure> {
        if self.summary.passed() {
            Ok(self)
        } else {
            let failed: Vec<&str> = self.summary.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
            Err(Failure::Acceptance(format!("failed checks: {}", failed.join("; "))))
        }
    }
}

pub fn output_dir(cfg: &LoadedConfig, over: Option<&Path>) -> PathBuf {
    match (over, &cfg.config.output) {
        (Some(p), _) => p.to_owned(),
        (None, Some(p)) => p.clone(),
        (None, None) => output_root().join(cfg.config.experiment.to_string()),
    }
}

pub fn run_path(config: &Path, over: Option<&Path>) -> Result<RunOutcome, Failure> {
    let cfg = load_config(config)?;
    run_loaded(&cfg, over, &mut Cache::default())
}

pub fn run_loaded(cfg: &LoadedConfig, over: Option<&Path>, cache: &mut Cache) -> Result<RunOutcome, Failure> {
    let dir = output_dir(cfg, over);
    std::fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    std::fs::write(dir.join(CONFIG_COPY), &cfg.source).map_err(|e| io_failure(&dir, e))?;
    let mut manifest = Manifest::start(cfg.config.experiment.to_string(), cfg.hash.clone(), cfg.config.sampler.seed);
    manifest.write(&dir)?;
    let t = Instant::now();
    match execute(&cfg.config, &cfg.hash, cache) {
        Ok(out) => {
            write_json(&dir.join(RESULTS_FILE), &out.results)?;
            write_json(&dir.join(SUMMARY_FILE), &out.summary)?;
            emit(&dir)?;
            manifest.status = Status::Finished;
            manifest.finished = Some(unix_now());
            manifest.wall_seconds = Some(t.elapsed().as_secs_f64());
            manifest.stages = out.stages;
            manifest.acceptance_passed = Some(out.summary.passed());
            manifest.write(&dir)?;
            Ok(RunOutcome { dir, summary: out.summary })
        }
        Err(e) => {
            manifest.status = Status::Failed;
            manifest.finished = Some(unix_now());
            manifest.wall_seconds = Some(t.elapsed().as_secs_f64());
            manifest.error = Some(e.to_string());
            manifest.write(&dir)?;
            Err(e)
        }
    }
}
