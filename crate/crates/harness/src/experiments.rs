//! The pipelines behind each experiment tag.

use std::collections::HashMap;

use cle_core::conformal::{elongation_map, ComplexPoint};
use cle_core::domains::{rasterize, DomainSpec};
use cle_core::estimators::{
    calibrate_normalization, central_charge, estimate_prob, kappa_from_central_charge, one_point_via_relative_z,
    point_split_object, restriction_residual, stress_insertion, transformation_residual, ward_residual,
    CentralChargeReport, CentralChargeSettings, ChargeRouteSettings, McSettings, NormalizationTable, OnePointReport,
    PointSplitReport, RestrictionReport, StressInsertion, TransformationReport, WardReport,
};
use cle_core::events::EventSpec;
use cle_core::lattice::LatticeSpec;
use cle_core::sampler::enumerate_exact;
use cle_core::stats::{ComplexEstimate, Estimate};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::checks::CheckOutcome;
use crate::config::{Experiment, RunConfig};
use crate::manifest::StageCount;
use crate::summary::{eta_pairs, ladder_pairs, model_name, Summary};
use crate::Failure;

/// Pull below which a residual counts as consistent with zero.
pub const PULL_GATE: f64 = 3.0;
/// Pull below which the two central-charge routes count as agreeing.
pub const ROUTE_GATE: f64 = 2.0;
/// Target central charge of the critical Ising loop ensemble.
pub const C_TARGET: f64 = 0.5;
pub const C_WINDOW: (f64, f64) = (0.25, 0.75);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReplica {
    pub seed: u64,
    pub estimate: Estimate,
    pub pull: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleTinyReport {
    pub sites: usize,
    pub exact: f64,
    pub replicas: Vec<OracleReplica>,
    pub mean_pull: f64,
    pub rms_pull: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralChargeRow {
    pub l0: u32,
    pub calibration_l0: u32,
    pub table: NormalizationTable,
    pub report: CentralChargeReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Results {
    SelftestExact { checks: Vec<CheckOutcome> },
    OracleTiny { report: OracleTinyReport },
    Restriction { table: NormalizationTable, report: RestrictionReport },
    WardDisk { table: NormalizationTable, report: WardReport },
    WardPlane { table: NormalizationTable, report: WardReport },
    OnePoint { table: NormalizationTable, stress: StressInsertion, relative: Option<OnePointReport> },
    CentralCharge { rows: Vec<CentralChargeRow> },
    Transformation { table: NormalizationTable, central_charge: Estimate, c_source: String, report: TransformationReport },
    PointSplit { reports: Vec<PointSplitReport> },
}

pub struct Outcome {
    pub results: Results,
    pub summary: Summary,
    pub stages: Vec<StageCount>,
}

/// Normalisation tables keyed by everything that determines them.
#[derive(Default)]
pub struct Cache {
    tables: HashMap<String, NormalizationTable>,
}

impl Cache {
    fn table(&mut self, cfg: &RunConfig, l0: Option<u32>) -> Result<NormalizationTable, Failure> {
        let (b, proxy, ladder) = cfg.calibration_ladder(l0)?;
        let mc = cfg.mc()?;
        let key = serde_json::to_string(&(b, proxy, &ladder, &mc)).map_err(|e| Failure::Estimation(e.to_string()))?;
        if let Some(t) = self.tables.get(&key) {
            return Ok(t.clone());
        }
        let t = calibrate_normalization(b, &ladder, proxy, &mc)?;
        self.tables.insert(key, t.clone());
        Ok(t)
    }
}

fn stage(name: impl Into<String>, samples: usize, discarded: Option<usize>) -> StageCount {
    StageCount { name: name.into(), samples, discarded }
}

fn table_stages(t: &NormalizationTable, prefix: &str, out: &mut Vec<StageCount>) {
    for r in &t.rows {
        out.push(stage(format!("{prefix}calibration eps={} L={} denominator", r.eps, r.resolution), r.denominator.n_samples, None));
        out.push(stage(format!("{prefix}calibration eps={} L={} reference", r.eps, r.resolution), r.reference.n_samples, None));
    }
}

fn stress_stages(s: &StressInsertion, name: &str, out: &mut Vec<StageCount>) {
    for r in &s.rungs {
        out.push(stage(format!("{name} eps={} L={}", r.eps, r.resolution), r.n_samples, Some(r.discarded)));
    }
}

fn put_table(sum: &mut Summary, t: &NormalizationTable, key: &str) {
    sum.put_estimate(key, &t.norm, "calibrate_normalization", ladder_pairs(&t.ladder()), &model_name(&t.ratio_fit.model, t.ratio_fit.exponent));
}

fn put_stress(sum: &mut Summary, key: &str, s: &StressInsertion, ladder: Vec<(f64, f64)>) {
    let model = model_name(&s.result.model, s.result.exponent);
    sum.put_complex(key, &s.estimate(), "stress_insertion", ladder, &model);
    if s.aliasing_warning {
        sum.diagnostics.push(format!("{key}: mode-4 power suggests aliasing at n_theta = {}", s.n_theta));
    }
}

fn fmt_pull(p: f64) -> String {
    format!("{p:.3}")
}

fn residual_check(sum: &mut Summary, name: &str, e: &ComplexEstimate) {
    let pull = e.pull(Complex64::new(0.0, 0.0));
    sum.check(
        name,
        pull < PULL_GATE,
        format!("residual {:.6e}{:+.6e}i, pull {} (gate {PULL_GATE})", e.mean.re, e.mean.im, fmt_pull(pull)),
    );
}

pub fn execute(cfg: &RunConfig, hash: &str, cache: &mut Cache) -> Result<Outcome, Failure> {
    cfg.validate()?;
    let mut sum = Summary::new(cfg.experiment.to_string(), hash.to_owned(), cfg.sampler.seed);
    let mut stages = Vec::new();
    let results = match cfg.experiment {
        Experiment::SelftestExact => {
            let mut checks = crate::checks::deterministic_suite(&crate::checks::Kernel::default());
            checks.extend(crate::checks::events_suite());
            for c in &checks {
                sum.check(&format!("{} {}", c.id, c.title), c.passed, c.detail.clone());
            }
            let passed = checks.iter().filter(|c| c.passed).count();
            sum.put("checks_passed", passed as f64, 0.0, "deterministic suite", vec![], "count");
            sum.put("checks_failed", (checks.len() - passed) as f64, 0.0, "deterministic suite", vec![], "count");
            Results::SelftestExact { checks }
        }
        Experiment::OracleTiny => {
            let report = oracle_tiny(cfg, &mut stages)?;
            sum.put("exact", report.exact, 0.0, "enumerate_exact", vec![], "exact");
            sum.put("mean_pull", report.mean_pull, 0.0, "estimate_prob replicas", vec![], "signed pull mean");
            sum.put("rms_pull", report.rms_pull, 0.0, "estimate_prob replicas", vec![], "pull rms");
            let worst = report.replicas.iter().map(|r| r.pull.abs()).fold(0.0, f64::max);
            sum.check(
                "oracle pulls",
                worst < 4.0 && report.rms_pull < 2.0,
                format!("{} replicas on {} sites, max |pull| {worst:.3}, rms {:.3}", report.replicas.len(), report.sites, report.rms_pull),
            );
            Results::OracleTiny { report }
        }
        Experiment::Restriction => {
            let b = cfg.restriction.as_ref().expect("validated");
            let table = cache.table(cfg, None)?;
            table_stages(&table, "", &mut stages);
            let report = restriction_residual(&b.event, &b.inner, &b.domain, &table, &cfg.mc()?)?;
            for r in &report.rungs {
                stages.push(stage(format!("restriction eps={} L={}", r.eps, r.resolution), r.ratio.n_samples, None));
            }
            put_table(&mut sum, &table, "normalization");
            let lad = ladder_pairs(&table.ladder());
            sum.put_fit("residual", &report.residual_fit, "restriction_residual", lad);
            let exact = report.rungs.iter().all(|r| r.prelimit_ratio.to_bits() == r.conditional.to_bits());
            sum.check("pre-limit ratio equals conditional frequency", exact, format!("{} rungs compared bitwise", report.rungs.len()));
            let pull = report.residual.pull(0.0);
            sum.check(
                "restriction residual",
                pull < PULL_GATE,
                format!("residual {:.6e} ± {:.6e}, pull {}", report.residual.mean, report.residual.std_err, fmt_pull(pull)),
            );
            if !report.shrinking {
                sum.diagnostics.push("restriction residual does not shrink along the ladder".into());
            }
            Results::Restriction { table, report }
        }
        Experiment::WardDisk | Experiment::WardPlane => {
            let b = cfg.ward.as_ref().expect("validated");
            let table = cache.table(cfg, None)?;
            table_stages(&table, "", &mut stages);
            let st = cfg.stress(None)?;
            let deriv = cfg.derivative()?;
            let report = ward_residual(&b.event, ComplexPoint::Finite(b.w), &b.domain, &table, &st, &deriv)?;
            for r in &report.insertion.table {
                stages.push(stage(format!("ward insertion eps={}", r.eps), r.estimate.n_samples, None));
            }
            stages.push(stage("ward derivative", report.derivative.estimate.n_samples, None));
            put_table(&mut sum, &table, "normalization");
            let lad = ladder_pairs(&st.rungs);
            let model = model_name(&report.insertion.model, report.insertion.exponent);
            sum.put_complex("insertion", &report.insertion.estimate(), "ward_residual insertion", lad.clone(), &model);
            sum.put_complex("derivative", &report.derivative.estimate, "fourier_mode_derivative", eta_pairs(&report.derivative.ladder, deriv.resolution), "richardson");
            sum.put_estimate("prob", &report.prob, "event_table", lad.clone(), "finest rung");
            sum.put_complex("residual", &report.residual, "ward_residual", lad, &model);
            residual_check(&mut sum, if report.plane { "plane ward residual" } else { "domain ward residual" }, &report.residual);
            if cfg.experiment == Experiment::WardDisk {
                Results::WardDisk { table, report }
            } else {
                Results::WardPlane { table, report }
            }
        }
        Experiment::OnePoint => {
            let b = cfg.one_point.as_ref().expect("validated");
            let table = cache.table(cfg, None)?;
            table_stages(&table, "", &mut stages);
            let st = cfg.stress(None)?;
            let w = ComplexPoint::Finite(b.w);
            let stress = stress_insertion(&EventSpec::Trivial, w, &b.domain, &table, &st)?;
            stress_stages(&stress, "one-point stress", &mut stages);
            put_table(&mut sum, &table, "normalization");
            let lad = ladder_pairs(&st.rungs);
            put_stress(&mut sum, "p1_stress", &stress, lad.clone());
            let finest = stress.rungs.last().expect("nonempty ladder");
            sum.put_complex("p1_stress_finest", &finest.estimate, "stress_insertion", vec![(finest.eps, finest.resolution as f64)], "finest rung");
            if matches!(b.domain, DomainSpec::Disk { .. }) {
                residual_check(&mut sum, "disk one-point vanishes at the smallest eps", &finest.estimate);
            }
            let relative = match (&b.inner, b.eps_fat) {
                (Some(d), Some(e)) => {
                    let deriv = cfg.derivative()?;
                    let r = one_point_via_relative_z(w, &b.domain, d, &table, e, &deriv)?;
                    stages.push(stage("one-point relative partition derivative", r.estimate.n_samples, None));
                    sum.put_complex("p1_relative_z", &r.estimate, "one_point_via_relative_z", eta_pairs(&r.derivative.ladder, deriv.resolution), "richardson");
                    let a = stress.estimate();
                    let diff = ComplexEstimate::from_cov(
                        a.mean - r.estimate.mean,
                        [[a.cov[0][0] + r.estimate.cov[0][0], a.cov[0][1] + r.estimate.cov[0][1]], [a.cov[1][0] + r.estimate.cov[1][0], a.cov[1][1] + r.estimate.cov[1][1]]],
                        a.n_samples.min(r.estimate.n_samples),
                    );
                    residual_check(&mut sum, "stress and relative-partition routes agree", &diff);
                    Some(r)
                }
                _ => None,
            };
            Results::OnePoint { table, stress, relative }
        }
        Experiment::CentralCharge => {
            let b = cfg.central_charge.as_ref().expect("validated");
            let mut rows = Vec::with_capacity(b.l0_values.len());
            let largest = b.l0_values.iter().copied().max().unwrap_or(0);
            for &l in &b.l0_values {
                let (cl, sl) = cfg.scaled_l0(l)?;
                let table = cache.table(cfg, Some(cl))?;
                table_stages(&table, &format!("L0={l} "), &mut stages);
                // The charge route does not depend on the stress resolution.
                let charge = match &b.charge {
                    Some(c) if l == largest => Some(ChargeRouteSettings {
                        rho: c.rho,
                        r_min: c.r_min,
                        r_max: c.r_max,
                        n_r: c.n_r,
                        n_phi: c.n_phi,
                        eps_fat: c.eps_fat,
                        deriv: cfg.derivative()?,
                    }),
                    _ => None,
                };
                let settings = CentralChargeSettings { b_tilde: b.b_tilde, stress: cfg.stress(Some(sl))?, charge };
                let report = central_charge(&table, &settings)?;
                if let Some(s) = &report.elongated {
                    stress_stages(s, &format!("L0={l} elongated-domain stress"), &mut stages);
                }
                let lad = ladder_pairs(&settings.stress.rungs);
                if let Some(c) = &report.c_via_elongated_domain {
                    let model = report.elongated.as_ref().map(|s| model_name(&s.result.model, s.result.exponent)).unwrap_or_default();
                    sum.put_estimate(&format!("c_route2.L0={l}"), c, "2 Re stress_insertion on the elongated disk", lad.clone(), &model);
                }
                if let Some(c) = &report.c_via_charge_fit {
                    sum.put_estimate(&format!("c_route1.L0={l}"), c, "charge_fit of the relative partition derivative", vec![], "gamma z^-4 + z^-5 + z^-3");
                }
                if let Some(p) = report.pull {
                    sum.put(&format!("route_pull.L0={l}"), p, 0.0, "|c1 - c2| / combined error", vec![], "pull");
                }
                if let Some(k) = report.kappa_implied {
                    sum.put(&format!("kappa_implied.L0={l}"), k, 0.0, "inverse of c(kappa)", vec![], "closed form");
                }
                for d in &report.diagnostics {
                    sum.diagnostics.push(format!("L0={l}: {d}"));
                }
                rows.push(CentralChargeRow { l0: l, calibration_l0: cl, table, report });
            }
            central_charge_checks(&mut sum, &rows, b.charge.is_some());
            Results::CentralCharge { rows }
        }
        Experiment::Transformation => {
            let b = cfg.transformation.as_ref().expect("validated");
            let table = cache.table(cfg, None)?;
            table_stages(&table, "", &mut stages);
            let st = cfg.stress(None)?;
            let (c, c_source) = match (b.central_charge, b.b_tilde) {
                (Some(c), _) => (Estimate { mean: c, std_err: b.central_charge_std_err, n_samples: 0, autocorr_corrected: false }, "config".to_owned()),
                (None, Some(bt)) => {
                    let dom = DomainSpec::AnalyticImage { map: elongation_map(bt)? };
                    let s = stress_insertion(&EventSpec::Trivial, ComplexPoint::new(0.0, 0.0), &dom, &table, &st)?;
                    stress_stages(&s, "elongated-domain stress", &mut stages);
                    let e = s.estimate();
                    (
                        Estimate { mean: 2.0 * e.mean.re, std_err: 2.0 * e.std_err.re, n_samples: e.n_samples, autocorr_corrected: true },
                        "elongated-domain stress insertion".to_owned(),
                    )
                }
                (None, None) => unreachable!("validated"),
            };
            let report = transformation_residual(&b.map, &b.event, ComplexPoint::Finite(b.w), &b.domain, c, &table, &st)?;
            stress_stages(&report.p1, "P1(X;w)_C", &mut stages);
            stress_stages(&report.p1_image, "P1(gX;gw)_gC", &mut stages);
            put_table(&mut sum, &table, "normalization");
            let lad = ladder_pairs(&st.rungs);
            sum.put_estimate("central_charge", &c, &c_source, lad.clone(), "");
            put_stress(&mut sum, "p1", &report.p1, lad.clone());
            put_stress(&mut sum, "p1_image", &report.p1_image, lad.clone());
            sum.put("schwarzian.re", report.schwarzian.re, 0.0, "schwarzian", vec![], "closed form");
            sum.put("schwarzian.im", report.schwarzian.im, 0.0, "schwarzian", vec![], "closed form");
            sum.put_complex("residual", &report.residual, "transformation_residual", lad, "");
            residual_check(&mut sum, "transformation residual", &report.residual);
            Results::Transformation { table, central_charge: c, c_source, report }
        }
        Experiment::PointSplit => {
            let b = cfg.point_split.as_ref().expect("validated");
            let mc = cfg.mc()?;
            let mut reports = Vec::with_capacity(b.resolutions.len());
            for &l in &b.resolutions {
                let lattice = LatticeSpec::with_resolution(l)?;
                let r = point_split_object(ComplexPoint::Finite(b.w), &b.separations, b.k, b.c_sub, &b.domain, &lattice, &mc)?;
                for row in &r.rows {
                    stages.push(stage(format!("point split L={l} delta={}", row.separation), row.pair_count.n_samples, Some(row.discarded)));
                }
                let lad: Vec<(f64, f64)> = b.separations.iter().map(|d| (*d, l as f64)).collect();
                sum.put_fit(&format!("plateau.L={l}"), &r.plateau, "point_split_object", lad.clone());
                sum.put_estimate(&format!("log_slope.L={l}"), &r.log_slope, "weighted slope of k n against -log delta", lad, "linear");
                reports.push(r);
            }
            point_split_checks(&mut sum, &reports);
            Results::PointSplit { reports }
        }
    };
    Ok(Outcome { results, summary: sum, stages })
}

fn oracle_tiny(cfg: &RunConfig, stages: &mut Vec<StageCount>) -> Result<OracleTinyReport, Failure> {
    let b = cfg.oracle.as_ref().expect("validated");
    let mc: McSettings = cfg.mc()?;
    let lattice = LatticeSpec::with_resolution(b.resolution)?;
    let sites = rasterize(&b.domain, &lattice)?.len();
    let exact = enumerate_exact(&b.domain, &lattice, &b.event, cfg.sampler.beta)?;
    let mut replicas = Vec::with_capacity(b.replicas);
    for k in 0..b.replicas {
        let m = mc.with_stream(k as u64 + 1);
        let estimate = estimate_prob(&b.event, &b.domain, &lattice, &m)?;
        let pull = if estimate.std_err > 0.0 { (estimate.mean - exact) / estimate.std_err } else { f64::INFINITY };
        stages.push(stage(format!("oracle replica {k}"), estimate.n_samples, None));
        replicas.push(OracleReplica { seed: m.sampler.seed, estimate, pull });
    }
    let n = replicas.len() as f64;
    let mean_pull = replicas.iter().map(|r| r.pull).sum::<f64>() / n;
    let rms_pull = (replicas.iter().map(|r| r.pull * r.pull).sum::<f64>() / n).sqrt();
    Ok(OracleTinyReport { sites, exact, replicas, mean_pull, rms_pull })
}

/// Trend toward the target, the largest-L window and the route agreement.
fn central_charge_checks(sum: &mut Summary, rows: &[CentralChargeRow], charge_requested: bool) {
    let c2: Vec<(u32, Estimate)> = rows.iter().filter_map(|r| r.report.c_via_elongated_domain.map(|c| (r.l0, c))).collect();
    if c2.len() != rows.len() || c2.is_empty() {
        sum.check("c(L) trend", false, "elongated-domain route failed for some L".into());
    } else {
        let dist: Vec<f64> = c2.iter().map(|(_, c)| (c.mean - C_TARGET).abs()).collect();
        let monotone = dist.windows(2).all(|w| w[1] <= w[0]);
        let last = c2.last().expect("nonempty").1;
        let inside = last.mean >= C_WINDOW.0 && last.mean <= C_WINDOW.1;
        let trail: Vec<String> = c2.iter().map(|(l, c)| format!("L0={l}: {:.4}±{:.4}", c.mean, c.std_err)).collect();
        sum.check(
            "c(L) trend toward 1/2 and largest-L window",
            monotone && inside,
            format!("{}; monotone {monotone}, largest in [{}, {}] {inside}", trail.join(", "), C_WINDOW.0, C_WINDOW.1),
        );
    }
    if charge_requested {
        let row = rows.iter().max_by_key(|r| r.l0);
        let pull = row.and_then(|r| r.report.pull);
        let l = row.map(|r| r.l0).unwrap_or(0);
        sum.check(
            "charge-fit and elongated-domain routes agree",
            pull.map(|p| p < ROUTE_GATE).unwrap_or(false),
            format!("L0={l}: pull {} (gate {ROUTE_GATE})", pull.map(fmt_pull).unwrap_or_else(|| "n/a".into())),
        );
    }
    if let Some((_, c)) = c2.last() {
        if kappa_from_central_charge(c.mean).is_none() {
            sum.diagnostics.push(format!("c = {} lies outside (0, 1]; no kappa", c.mean));
        }
    }
}

fn point_split_checks(sum: &mut Summary, reports: &[PointSplitReport]) {
    let positive = reports.iter().all(|r| r.k == 0.0 || r.log_slope.mean * r.k.signum() > 0.0);
    let txt: Vec<String> = reports.iter().map(|r| format!("L={}: {:.4}±{:.4}", r.resolution, r.log_slope.mean, r.log_slope.std_err)).collect();
    sum.check("unsubtracted log-slope is positive", positive, txt.join(", "));
    for w in reports.windows(2) {
        let (a, b) = (&w[0].log_slope, &w[1].log_slope);
        let pull = (a.mean - b.mean).abs() / a.std_err.hypot(b.std_err);
        let pull = if pull.is_nan() { 0.0 } else { pull };
        sum.check(
            &format!("log-slope stable from L={} to L={}", w[0].resolution, w[1].resolution),
            pull < PULL_GATE,
            format!("pull {}", fmt_pull(pull)),
        );
    }
}
