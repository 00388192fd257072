//! Experiment driver for the cle-core estimators: run configuration,
//! manifests, JSON summaries, CSV plot data and the acceptance checks.

pub mod checks;
pub mod config;
pub mod emit;
pub mod experiments;
pub mod manifest;
pub mod run;
pub mod selftest;
pub mod summary;

use std::fmt;
use std::path::PathBuf;

/// Default output root for `run` when the config names no directory.
pub const OUTPUT_ROOT_ENV: &str = "CLE_OUTPUT_ROOT";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_ESTIMATION: i32 = 2;
pub const EXIT_ACCEPTANCE: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Validation(String),
    Estimation(String),
    Acceptance(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Estimation(_) => EXIT_ESTIMATION,
            Failure::Acceptance(_) => EXIT_ACCEPTANCE,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "validation: {m}"),
            Failure::Estimation(m) => write!(f, "estimation: {m}"),
            Failure::Acceptance(m) => write!(f, "acceptance: {m}"),
        }
    }
}

impl std::error::Error for Failure {}

impl From<cle_core::Error> for Failure {
    fn from(e: cle_core::Error) -> Self {
        use cle_core::Error::*;
        match e {
            Domain(_) | Pole(_) | NotImplemented(_) | DomainTooSmall(_) | MaskTooLarge(_) | Format(_) => {
                Failure::Validation(e.to_string())
            }
            PointOnLoop | Estimation(_) | Calibration(_) | Io(_) => Failure::Estimation(e.to_string()),
        }
    }
}

pub(crate) fn io_failure(path: &std::path::Path, e: impl fmt::Display) -> Failure {
    Failure::Estimation(format!("{}: {e}", path.display()))
}

/// $CLE_OUTPUT_ROOT, or `results` under the working directory.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("results"))
}
