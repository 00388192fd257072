//! Acceptance criteria 1 to 14, one PASS/FAIL line each.
//!
//! ACCEPTANCE_SCALE=smoke (default) runs the statistical criteria on small
//! ladders; ACCEPTANCE_SCALE=full uses the long-run settings. Criterion 13
//! is reported but does not affect the exit status.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use cle_core::conformal::MobiusMap;
use cle_core::domains::DomainSpec;
use cle_core::estimators::renormalized_prob_rotated;
use cle_core::events::EventSpec;
use cle_core::sampler::{Algorithm, BETA_C};
use cle_core::stats::ExtrapolationResult;
use cle_harness::checks::{Kernel, DETERMINISTIC};
use cle_harness::config::{
    CalibrationBlock, CentralChargeBlock, ChargeRouteBlock, DerivativeBlock, Experiment, McBlock, OnePointBlock,
    RestrictionBlock, RunConfig, SamplerBlock, StressBlock, TransformationBlock, WardBlock,
};
use cle_harness::experiments::{execute, Cache, Results, PULL_GATE};
use cle_harness::selftest::tiny_oracle;
use cle_harness::summary::Summary;
use num_complex::Complex64;

const SEED: u64 = 20_240_611;
/// Criterion 8 sample count: 10 chains of 10⁴.
const ORACLE_CHAINS: usize = 10;
const ORACLE_SAMPLES: usize = 10_000;
/// Criterion 10 Möbius map: the disk automorphism moving `MOBIUS_A` to 0.
const MOBIUS_A: f64 = 0.2;
const ROTATION: f64 = PI / 3.0;

struct Scale {
    name: &'static str,
    chains: usize,
    samples: usize,
    burnin: u32,
    cal_eps: Vec<f64>,
    cal_l0: u32,
    stress_eps: Vec<f64>,
    stress_l0: u32,
    n_theta: usize,
    deriv_resolution: u32,
    deriv_ladder: Vec<f64>,
    deriv_n_theta: usize,
    cc_l0: Vec<u32>,
    charge: ChargeRouteBlock,
}

fn scale() -> Scale {
    let full = std::env::var("ACCEPTANCE_SCALE").map(|s| s == "full").unwrap_or(false);
    if full {
        Scale {
            name: "full",
            chains: 8,
            samples: 5_000,
            burnin: 200,
            cal_eps: vec![0.5, 0.35, 0.25, 0.18],
            cal_l0: 16,
            stress_eps: vec![0.3, 0.2, 0.14],
            stress_l0: 64,
            n_theta: 24,
            deriv_resolution: 24,
            deriv_ladder: cle_core::derivative::MC_LADDER.to_vec(),
            deriv_n_theta: 8,
            cc_l0: vec![64, 128, 256],
            charge: ChargeRouteBlock { rho: 1.0, r_min: 1.5, r_max: 15.0, n_r: 5, n_phi: 8, eps_fat: 0.5 },
        }
    } else {
        Scale {
            name: "smoke",
            chains: 4,
            samples: 400,
            burnin: 50,
            cal_eps: vec![0.5, 0.35, 0.25],
            cal_l0: 8,
            stress_eps: vec![0.3, 0.2],
            stress_l0: 24,
            n_theta: 12,
            deriv_resolution: 12,
            deriv_ladder: vec![1e-2],
            deriv_n_theta: 4,
            cc_l0: vec![16, 24],
            charge: ChargeRouteBlock { rho: 1.0, r_min: 1.5, r_max: 15.0, n_r: 3, n_phi: 4, eps_fat: 0.5 },
        }
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn parity_at(x: f64) -> EventSpec {
    EventSpec::SurroundsParity { z0: c(x, 0.0), r: 0.0 }
}

fn base(s: &Scale, experiment: Experiment) -> RunConfig {
    RunConfig {
        experiment,
        output: None,
        sampler: SamplerBlock { seed: SEED, sweeps_burnin: s.burnin, thinning: 1, algorithm: Algorithm::Wolff, beta: BETA_C },
        mc: Some(McBlock { chains: s.chains, samples_per_chain: s.samples }),
        calibration: Some(CalibrationBlock { b: 2.0, proxy_radius: 2.0, eps: s.cal_eps.clone(), l0: s.cal_l0 }),
        stress: Some(StressBlock { n_theta: s.n_theta, eps_fat: 0.5, eps: s.stress_eps.clone(), l0: s.stress_l0 }),
        derivative: Some(DerivativeBlock {
            resolution: s.deriv_resolution,
            ladder: s.deriv_ladder.clone(),
            n_theta: s.deriv_n_theta,
        }),
        oracle: None,
        restriction: None,
        ward: None,
        one_point: None,
        central_charge: None,
        transformation: None,
        point_split: None,
    }
}

struct Line {
    id: u32,
    title: String,
    passed: bool,
    gated: bool,
    detail: String,
    seconds: f64,
}

fn print(l: &Line) {
    let verdict = if l.passed { "PASS" } else { "FAIL" };
    let gate = if l.gated { "" } else { " (reported, not gated)" };
    println!("{verdict} {:>2} {}{gate} [{:.1}s]: {}", l.id, l.title, l.seconds, l.detail);
}

fn summary_line(id: u32, title: &str, r: Result<Summary, String>, t: Instant) -> Line {
    let (passed, detail) = match r {
        Ok(s) => {
            let parts: Vec<String> =
                s.checks.iter().map(|c| format!("{}{}: {}", if c.passed { "" } else { "FAILED " }, c.name, c.detail)).collect();
            (s.passed() && !s.checks.is_empty(), parts.join("; "))
        }
        Err(e) => (false, e),
    };
    Line { id, title: title.into(), passed, gated: true, detail, seconds: t.elapsed().as_secs_f64() }
}

fn run(cfg: &RunConfig, cache: &mut Cache) -> Result<(Results, Summary), String> {
    execute(cfg, "acceptance", cache).map(|o| (o.results, o.summary)).map_err(|e| e.to_string())
}

fn bits_equal(a: &ExtrapolationResult, b: &ExtrapolationResult) -> bool {
    a.value.to_bits() == b.value.to_bits()
        && a.table.len() == b.table.len()
        && a.table.iter().zip(&b.table).all(|(x, y)| x.value.to_bits() == y.value.to_bits() && x.std_err.to_bits() == y.std_err.to_bits())
}

fn criterion_10(s: &Scale, cache: &mut Cache) -> Line {
    let t = Instant::now();
    let cfg = base(s, Experiment::Restriction);
    let mut go = || -> Result<(bool, String), String> {
        let table = cache_table(&cfg, cache)?;
        let mc = cfg.mc().map_err(|e| e.to_string())?;
        let cdom = DomainSpec::unit_disk();
        let a = DomainSpec::disk(c(0.15, 0.1), 0.3);
        let x = parity_at(0.6);
        let e = |r: cle_core::Result<ExtrapolationResult>| r.map_err(|e| e.to_string());
        let plain = e(renormalized_prob_rotated(&x, &a, &cdom, &table, &mc, 0.0))?;
        let rot = MobiusMap::affine(Complex64::from_polar(1.0, ROTATION), c(0.0, 0.0)).map_err(|e| e.to_string())?;
        let xr = x.transformed(&rot).map_err(|e| e.to_string())?;
        let ar = a.clone().mobius_image(rot);
        let rotated = e(renormalized_prob_rotated(&xr, &ar, &cdom, &table, &mc, ROTATION))?;
        let same = bits_equal(&plain, &rotated);
        let phi = MobiusMap::disk_automorphism(c(1.0, 0.0), c(-MOBIUS_A, 0.0)).map_err(|e| e.to_string())?;
        let xm = x.transformed(&phi).map_err(|e| e.to_string())?;
        let am = a.clone().mobius_image(phi);
        let moved = e(renormalized_prob_rotated(&xm, &am, &cdom.clone().mobius_image(phi), &table, &mc, 0.0))?;
        let pull = (moved.value - plain.value).abs() / moved.error.hypot(plain.error);
        Ok((
            same && pull < PULL_GATE,
            format!(
                "rotation by pi/3: {} ({} vs {}); disk automorphism a={MOBIUS_A}: {:.5} ± {:.5} vs {:.5} ± {:.5}, pull {pull:.3} (gate {PULL_GATE})",
                if same { "bit-identical" } else { "DIFFERENT" },
                plain.value,
                rotated.value,
                moved.value,
                moved.error,
                plain.value,
                plain.error
            ),
        ))
    };
    let (passed, detail) = go().unwrap_or_else(|e| (false, e));
    Line { id: 10, title: "global invariance".into(), passed, gated: true, detail, seconds: t.elapsed().as_secs_f64() }
}

/// The shared normalisation table, through a restriction run's cache.
fn cache_table(cfg: &RunConfig, cache: &mut Cache) -> Result<cle_core::estimators::NormalizationTable, String> {
    let mut r = cfg.clone();
    r.restriction = Some(RestrictionBlock {
        domain: DomainSpec::SphereProxy { radius: 1.5 },
        inner: DomainSpec::disk(c(0.0, 0.0), 0.4),
        event: parity_at(0.9),
    });
    match run(&r, cache)? {
        (Results::Restriction { table, .. }, _) => Ok(table),
        _ => Err("unexpected results".into()),
    }
}

fn main() -> ExitCode {
    let s = scale();
    println!("acceptance scale: {} (seed {SEED})", s.name);
    let mut lines = Vec::new();
    let kernel = Kernel::default();
    for (k, check) in DETERMINISTIC.iter().enumerate() {
        let t = Instant::now();
        let o = check(&kernel);
        let l = Line {
            id: k as u32 + 1,
            title: o.title,
            passed: o.passed,
            gated: true,
            detail: o.detail,
            seconds: t.elapsed().as_secs_f64(),
        };
        print(&l);
        lines.push(l);
    }

    let t = Instant::now();
    let o = tiny_oracle("8", SEED, ORACLE_CHAINS, ORACLE_SAMPLES);
    let l = Line { id: 8, title: o.title, passed: o.passed, gated: true, detail: o.detail, seconds: t.elapsed().as_secs_f64() };
    print(&l);
    lines.push(l);

    let mut cache = Cache::default();

    let t = Instant::now();
    let mut cfg = base(&s, Experiment::Restriction);
    cfg.restriction = Some(RestrictionBlock {
        domain: DomainSpec::SphereProxy { radius: 1.5 },
        inner: DomainSpec::disk(c(0.0, 0.0), 0.4),
        event: parity_at(0.9),
    });
    let l = summary_line(9, "restriction", run(&cfg, &mut cache).map(|r| r.1), t);
    print(&l);
    lines.push(l);

    let l = criterion_10(&s, &mut cache);
    print(&l);
    lines.push(l);

    let t = Instant::now();
    let mut cfg = base(&s, Experiment::OnePoint);
    cfg.one_point = Some(OnePointBlock { domain: DomainSpec::unit_disk(), w: c(0.0, 0.0), inner: None, eps_fat: None });
    let l = summary_line(11, "disk one-point vanishing", run(&cfg, &mut cache).map(|r| r.1), t);
    print(&l);
    lines.push(l);

    let t = Instant::now();
    let mut cfg = base(&s, Experiment::WardDisk);
    cfg.ward = Some(WardBlock { domain: DomainSpec::unit_disk(), event: parity_at(0.5), w: c(0.0, 0.0) });
    let l = summary_line(12, "Ward identity on the disk", run(&cfg, &mut cache).map(|r| r.1), t);
    print(&l);
    lines.push(l);

    let t = Instant::now();
    let mut cfg = base(&s, Experiment::CentralCharge);
    cfg.stress.as_mut().expect("set").l0 = s.cc_l0[0];
    cfg.central_charge = Some(CentralChargeBlock { b_tilde: 2.0, l0_values: s.cc_l0.clone(), charge: Some(s.charge.clone()) });
    let cc = run(&cfg, &mut cache);
    let route2 = match &cc {
        Ok((Results::CentralCharge { rows }, _)) => rows.iter().max_by_key(|r| r.l0).and_then(|r| r.report.c_via_elongated_domain),
        _ => None,
    };
    let mut l = summary_line(13, "central charge", cc.map(|r| r.1), t);
    l.gated = false;
    print(&l);
    lines.push(l);

    let t = Instant::now();
    let mut cfg = base(&s, Experiment::Transformation);
    let l = match route2 {
        Some(c2) => {
            cfg.transformation = Some(TransformationBlock {
                map: cle_core::conformal::AnalyticMap::polynomial(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.1, 0.0)]),
                domain: DomainSpec::unit_disk(),
                event: parity_at(0.5),
                w: c(0.0, 0.0),
                central_charge: Some(c2.mean),
                central_charge_std_err: c2.std_err,
                b_tilde: None,
            });
            let mut l = summary_line(14, "transformation law", run(&cfg, &mut cache).map(|r| r.1), t);
            l.detail = format!("c = {:.4} ± {:.4} from criterion 13; {}", c2.mean, c2.std_err, l.detail);
            l
        }
        None => Line {
            id: 14,
            title: "transformation law".into(),
            passed: false,
            gated: true,
            detail: "no elongated-domain central charge from criterion 13".into(),
            seconds: 0.0,
        },
    };
    print(&l);
    lines.push(l);

    let passed = lines.iter().filter(|l| l.passed).count();
    let gated_failures: Vec<u32> = lines.iter().filter(|l| l.gated && !l.passed).map(|l| l.id).collect();
    println!("{passed}/{} criteria pass; gated failures: {gated_failures:?}", lines.len());
    if gated_failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
