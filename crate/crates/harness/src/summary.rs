//! Deterministic JSON summary: every number carries the estimator, ladder
//! and fit model that produced it.

use std::collections::BTreeMap;

use cle_core::estimators::Ladder;
use cle_core::stats::{ComplexEstimate, Estimate, ExtrapolationResult};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    pub std_err: f64,
    pub estimator: String,
    /// (ε, L) pairs, or the η ladder for derivatives; empty when not applicable.
    pub ladder: Vec<(f64, f64)>,
    pub model: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub quantities: BTreeMap<String, Quantity>,
    pub checks: Vec<Check>,
    pub diagnostics: Vec<String>,
}

impl Summary {
    pub fn new(experiment: String, config_hash: String, seed: u64) -> Self {
        Summary { experiment, config_hash, seed, quantities: BTreeMap::new(), checks: Vec::new(), diagnostics: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn put(&mut self, key: &str, value: f64, std_err: f64, estimator: &str, ladder: Vec<(f64, f64)>, model: &str) {
        self.quantities.insert(
            key.to_owned(),
            Quantity { value, std_err, estimator: estimator.into(), ladder, model: model.into() },
        );
    }

    pub fn put_estimate(&mut self, key: &str, e: &Estimate, estimator: &str, ladder: Vec<(f64, f64)>, model: &str) {
        self.put(key, e.mean, e.std_err, estimator, ladder, model);
    }

    pub fn put_fit(&mut self, key: &str, f: &ExtrapolationResult, estimator: &str, ladder: Vec<(f64, f64)>) {
        self.put(key, f.value, f.error, estimator, ladder, &model_name(&f.model, f.exponent));
    }

    /// Stores `key.re` and `key.im`.
    pub fn put_complex(&mut self, key: &str, e: &ComplexEstimate, estimator: &str, ladder: Vec<(f64, f64)>, model: &str) {
        self.put(&format!("{key}.re"), e.mean.re, e.std_err.re, estimator, ladder.clone(), model);
        self.put(&format!("{key}.im"), e.mean.im, e.std_err.im, estimator, ladder, model);
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.into(), passed, detail });
    }
}

pub fn model_name(model: &str, exponent: f64) -> String {
    if model == "power-law" {
        format!("power-law p={exponent}")
    } else {
        model.to_owned()
    }
}

pub fn ladder_pairs(l: &Ladder) -> Vec<(f64, f64)> {
    l.rungs.iter().map(|r| (r.eps, r.resolution as f64)).collect()
}

pub fn eta_pairs(etas: &[f64], resolution: u32) -> Vec<(f64, f64)> {
    etas.iter().map(|e| (*e, resolution as f64)).collect()
}
