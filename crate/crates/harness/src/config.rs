//! Run configuration: TOML with one section per pipeline stage. Unknown
//! keys are errors.

use std::fmt;
use std::path::{Path, PathBuf};

use cle_core::conformal::AnalyticMap;
use cle_core::domains::DomainSpec;
use cle_core::estimators::{DerivativeSettings, Ladder, McSettings, StressSettings};
use cle_core::events::EventSpec;
use cle_core::sampler::{Algorithm, SamplerConfig, BETA_C};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SelftestExact,
    OracleTiny,
    Restriction,
    WardDisk,
    WardPlane,
    OnePoint,
    CentralCharge,
    Transformation,
    PointSplit,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        f.write_str(&s)
    }
}

fn default_burnin() -> u32 {
    200
}
fn default_thinning() -> u32 {
    1
}
fn default_algorithm() -> Algorithm {
    Algorithm::Wolff
}
fn default_beta() -> f64 {
    BETA_C
}
fn default_b() -> f64 {
    2.0
}
fn default_n_theta() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerBlock {
    pub seed: u64,
    #[serde(default = "default_burnin")]
    pub sweeps_burnin: u32,
    #[serde(default = "default_thinning")]
    pub thinning: u32,
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    #[serde(default = "default_beta")]
    pub beta: f64,
}

impl SamplerBlock {
    pub fn config(&self) -> SamplerConfig {
        SamplerConfig {
            seed: self.seed,
            sweeps_burnin: self.sweeps_burnin,
            thinning: self.thinning,
            algorithm: self.algorithm,
            beta: self.beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McBlock {
    pub chains: usize,
    pub samples_per_chain: usize,
}

/// Reference ladder for 𝒩 and the reference denominators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationBlock {
    #[serde(default = "default_b")]
    pub b: f64,
    pub proxy_radius: f64,
    pub eps: Vec<f64>,
    /// Resolution of the first rung; later rungs are co-scaled.
    pub l0: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StressBlock {
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
    pub eps_fat: f64,
    pub eps: Vec<f64>,
    pub l0: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivativeBlock {
    pub resolution: u32,
    pub ladder: Vec<f64>,
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleBlock {
    pub domain: DomainSpec,
    pub resolution: u32,
    pub event: EventSpec,
    pub replicas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestrictionBlock {
    pub domain: DomainSpec,
    pub inner: DomainSpec,
    pub event: EventSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WardBlock {
    pub domain: DomainSpec,
    pub event: EventSpec,
    pub w: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnePointBlock {
    pub domain: DomainSpec,
    pub w: Complex64,
    /// D of the relative-partition route; without it only the stress route runs.
    #[serde(default)]
    pub inner: Option<DomainSpec>,
    /// Corridor width of the relative-partition route; a calibration rung.
    #[serde(default)]
    pub eps_fat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargeRouteBlock {
    pub rho: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    pub n_phi: usize,
    pub eps_fat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CentralChargeBlock {
    pub b_tilde: f64,
    /// Stress-ladder first-rung resolutions; the calibration ladder is rescaled
    /// by the same factor.
    pub l0_values: Vec<u32>,
    #[serde(default)]
    pub charge: Option<ChargeRouteBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformationBlock {
    pub map: AnalyticMap,
    pub domain: DomainSpec,
    pub event: EventSpec,
    pub w: Complex64,
    /// Fixed c; when absent the elongated-domain estimate is measured first.
    #[serde(default)]
    pub central_charge: Option<f64>,
    #[serde(default)]
    pub central_charge_std_err: f64,
    #[serde(default)]
    pub b_tilde: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSplitBlock {
    pub domain: DomainSpec,
    pub w: Complex64,
    pub separations: Vec<f64>,
    pub k: f64,
    pub c_sub: f64,
    pub resolutions: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    /// Results directory; defaults to $CLE_OUTPUT_ROOT/<experiment>.
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub sampler: SamplerBlock,
    #[serde(default)]
    pub mc: Option<McBlock>,
    #[serde(default)]
    pub calibration: Option<CalibrationBlock>,
    #[serde(default)]
    pub stress: Option<StressBlock>,
    #[serde(default)]
    pub derivative: Option<DerivativeBlock>,
    #[serde(default)]
    pub oracle: Option<OracleBlock>,
    #[serde(default)]
    pub restriction: Option<RestrictionBlock>,
    #[serde(default)]
    pub ward: Option<WardBlock>,
    #[serde(default)]
    pub one_point: Option<OnePointBlock>,
    #[serde(default)]
    pub central_charge: Option<CentralChargeBlock>,
    #[serde(default)]
    pub transformation: Option<TransformationBlock>,
    #[serde(default)]
    pub point_split: Option<PointSplitBlock>,
}

/// A parsed config with the hash of its source text.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub hash: String,
    pub source: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

pub fn parse_config(source: &str) -> Result<LoadedConfig, Failure> {
    let config: RunConfig = toml::from_str(source).map_err(|e| invalid(format!("config: {e}")))?;
    config.validate()?;
    Ok(LoadedConfig { config, hash: sha256_hex(source.as_bytes()), source: source.to_owned() })
}

pub fn load_config(path: &Path) -> Result<LoadedConfig, Failure> {
    let source = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&source)
}

fn need<'a, T>(block: &'a Option<T>, name: &str, exp: Experiment) -> Result<&'a T, Failure> {
    block.as_ref().ok_or_else(|| invalid(format!("experiment {exp} needs a [{name}] section")))
}

impl RunConfig {
    pub fn mc(&self) -> Result<McSettings, Failure> {
        let b = need(&self.mc, "mc", self.experiment)?;
        let mc = McSettings { sampler: self.sampler.config(), chains: b.chains, samples_per_chain: b.samples_per_chain };
        mc.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(mc)
    }

    pub fn calibration_ladder(&self, l0: Option<u32>) -> Result<(f64, f64, Ladder), Failure> {
        let b = need(&self.calibration, "calibration", self.experiment)?;
        let ladder = Ladder::co_scaled(&b.eps, l0.unwrap_or(b.l0)).map_err(|e| invalid(e.to_string()))?;
        Ok((b.b, b.proxy_radius, ladder))
    }

    pub fn stress(&self, l0: Option<u32>) -> Result<StressSettings, Failure> {
        let b = need(&self.stress, "stress", self.experiment)?;
        let rungs = Ladder::co_scaled(&b.eps, l0.unwrap_or(b.l0)).map_err(|e| invalid(e.to_string()))?;
        let s = StressSettings { n_theta: b.n_theta, eps_fat: b.eps_fat, rungs, mc: self.mc()? };
        s.validate().map_err(|e| invalid(e.to_string()))?;
        let cal = need(&self.calibration, "calibration", self.experiment)?;
        if !cal.eps.iter().any(|e| (e - b.eps_fat).abs() <= 1e-12) {
            return Err(invalid(format!("stress.eps_fat = {} is not a calibration rung", b.eps_fat)));
        }
        Ok(s)
    }

    pub fn derivative(&self) -> Result<DerivativeSettings, Failure> {
        let b = need(&self.derivative, "derivative", self.experiment)?;
        if b.ladder.is_empty() || b.resolution == 0 {
            return Err(invalid("derivative ladder must be nonempty and resolution positive"));
        }
        Ok(DerivativeSettings { resolution: b.resolution, ladder: b.ladder.clone(), n_theta: b.n_theta, mc: self.mc()? })
    }

    /// Calibration and stress first-rung resolutions for a central-charge
    /// stress resolution `l`: the calibration ladder scales with it.
    pub fn scaled_l0(&self, l: u32) -> Result<(u32, u32), Failure> {
        let cal = need(&self.calibration, "calibration", self.experiment)?;
        let st = need(&self.stress, "stress", self.experiment)?;
        let c = (cal.l0 as f64 * l as f64 / st.l0 as f64).round().max(1.0) as u32;
        Ok((c, l))
    }

    /// Checks that every section the experiment uses is present and valid.
    pub fn validate(&self) -> Result<(), Failure> {
        self.sampler.config().validate().map_err(|e| invalid(e.to_string()))?;
        let v = |r: cle_core::Result<()>| r.map_err(|e| invalid(e.to_string()));
        use Experiment::*;
        match self.experiment {
            SelftestExact => {}
            OracleTiny => {
                self.mc()?;
                let o = need(&self.oracle, "oracle", self.experiment)?;
                v(o.domain.validate())?;
                v(o.event.validate())?;
                if o.replicas == 0 {
                    return Err(invalid("oracle.replicas must be positive"));
                }
            }
            Restriction => {
                self.mc()?;
                self.calibration_ladder(None)?;
                let r = need(&self.restriction, "restriction", self.experiment)?;
                v(r.domain.validate())?;
                v(r.inner.validate())?;
                v(r.event.validate())?;
            }
            WardDisk | WardPlane => {
                self.stress(None)?;
                self.derivative()?;
                let w = need(&self.ward, "ward", self.experiment)?;
                v(w.domain.validate())?;
                v(w.event.validate())?;
                let plane = matches!(w.domain, DomainSpec::SphereProxy { .. });
                if plane != (self.experiment == WardPlane) {
                    return Err(invalid("ward-plane needs a sphere_proxy domain and ward-disk any other domain"));
                }
            }
            OnePoint => {
                self.stress(None)?;
                let o = need(&self.one_point, "one_point", self.experiment)?;
                v(o.domain.validate())?;
                if let Some(d) = &o.inner {
                    v(d.validate())?;
                    self.derivative()?;
                    let e = o.eps_fat.ok_or_else(|| invalid("one_point.inner needs one_point.eps_fat"))?;
                    let cal = need(&self.calibration, "calibration", self.experiment)?;
                    if !cal.eps.iter().any(|x| (x - e).abs() <= 1e-12) {
                        return Err(invalid(format!("one_point.eps_fat = {e} is not a calibration rung")));
                    }
                }
            }
            CentralCharge => {
                self.stress(None)?;
                let c = need(&self.central_charge, "central_charge", self.experiment)?;
                if c.l0_values.is_empty() {
                    return Err(invalid("central_charge.l0_values must be nonempty"));
                }
                for &l in &c.l0_values {
                    let (cl, sl) = self.scaled_l0(l)?;
                    self.calibration_ladder(Some(cl))?;
                    self.stress(Some(sl))?;
                }
                if c.charge.is_some() {
                    self.derivative()?;
                }
            }
            Transformation => {
                self.stress(None)?;
                let t = need(&self.transformation, "transformation", self.experiment)?;
                v(t.domain.validate())?;
                v(t.event.validate())?;
                if t.central_charge.is_none() && t.b_tilde.is_none() {
                    return Err(invalid("transformation needs central_charge or b_tilde"));
                }
            }
            PointSplit => {
                self.mc()?;
                let p = need(&self.point_split, "point_split", self.experiment)?;
                v(p.domain.validate())?;
                if p.resolutions.is_empty() {
                    return Err(invalid("point_split.resolutions must be nonempty"));
                }
            }
        }
        Ok(())
    }
}
