use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::conformal::{AnalyticMap, ComplexPoint, MobiusMap};
use crate::derivative::{fit_window, ContourFunctional, PointFunctional};
use crate::domains::{boundary_polyline, DomainSpec};
use crate::events::EventSpec;
use crate::lattice::LatticeSpec;
use crate::sampler::{enumerate_exact, SamplerConfig, BETA_C};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn mc(seed: u64, chains: usize, per: usize) -> McSettings {
    McSettings { sampler: SamplerConfig { seed, sweeps_burnin: 20, ..SamplerConfig::default() }, chains, samples_per_chain: per }
}

fn parity(z: Complex64) -> EventSpec {
    EventSpec::SurroundsParity { z0: z, r: 0.0 }
}

#[test]
fn trivial_and_contradictory_events_are_exact() {
    let d = DomainSpec::unit_disk();
    let l = LatticeSpec::with_resolution(4).unwrap();
    let one = estimate_prob(&EventSpec::Trivial, &d, &l, &mc(1, 2, 20)).unwrap();
    assert_eq!((one.mean, one.std_err), (1.0, 0.0));
    let x = parity(c(0.2, 0.1));
    let none = estimate_prob(&x.clone().and(x.complement()), &d, &l, &mc(1, 2, 20)).unwrap();
    assert_eq!((none.mean, none.std_err), (0.0, 0.0));
}

#[test]
fn tiny_crossing_matches_exact_enumeration() {
    let d = DomainSpec::unit_disk();
    let l = LatticeSpec::with_resolution(2).unwrap();
    let ev = EventSpec::Crossing { outer: DomainSpec::disk(c(0.0, 0.0), 0.9), inner: DomainSpec::disk(c(0.0, 0.0), 0.35) };
    let exact = enumerate_exact(&d, &l, &ev, BETA_C).unwrap();
    let est = estimate_prob(&ev, &d, &l, &mc(3, 4, 4000)).unwrap();
    assert!(est.pull(exact) < 3.0, "{est:?} vs {exact}");
}

#[test]
fn unsupported_event_is_rejected() {
    let l = LatticeSpec::with_resolution(4).unwrap();
    let r = estimate_prob(&parity(c(2.0, 0.0)), &DomainSpec::unit_disk(), &l, &mc(1, 1, 4));
    assert!(r.is_err());
}

#[test]
fn ladder_validation() {
    let l = Ladder::co_scaled(&[0.4, 0.2, 0.1], 4).unwrap();
    assert_eq!(l.rungs.iter().map(|r| r.resolution).collect::<Vec<_>>(), vec![4, 8, 16]);
    assert!(Ladder::co_scaled(&[0.2, 0.4], 4).is_err());
    assert!(Ladder::co_scaled(&[1.2, 0.4], 4).is_err());
    let bad = Ladder { rungs: vec![Rung { eps: 0.4, resolution: 4 }, Rung { eps: 0.2, resolution: 4 }] };
    assert!(bad.validate().is_err());
}

#[test]
fn mc_settings_validation_and_streams() {
    assert!(mc(1, 0, 10).validate().is_err());
    assert!(mc(1, 1, 1).validate().is_err());
    let m = mc(7, 1, 10);
    assert_ne!(m.with_stream(1).sampler.seed, m.with_stream(2).sampler.seed);
    assert_eq!(m.with_stream(1), m.with_stream(1));
}

proptest! {
    #[test]
    fn half_and_full_fourier_sums_agree_bitwise(v in proptest::collection::vec(0.0f64..1.0, 4..16)) {
        let h = v.len();
        let n = 2 * h;
        let full: Vec<f64> = v.iter().chain(v.iter()).copied().collect();
        prop_assert_eq!(fourier_coefficient(&full, n), fourier_coefficient_half(&v, n));
    }

    #[test]
    fn fourier_coefficient_ignores_constants(k in 2usize..12, a in -5.0f64..5.0) {
        let n = 4 * k;
        let v = vec![a; n];
        prop_assert!(fourier_coefficient(&v, n).norm() < 1e-14 * a.abs().max(1.0));
    }

    #[test]
    fn kappa_round_trip(cc in 0.01f64..1.0) {
        let k = kappa_from_central_charge(cc).unwrap();
        prop_assert!(k > 8.0 / 3.0 && k <= 4.0);
        prop_assert!((central_charge_of_kappa(k) - cc).abs() < 1e-12);
    }
}

#[test]
fn kappa_reference_values() {
    assert!((kappa_from_central_charge(0.5).unwrap() - 3.0).abs() < 1e-12);
    assert!((kappa_from_central_charge(1.0).unwrap() - 4.0).abs() < 1e-12);
    assert_eq!(central_charge_of_kappa(3.0), 0.5);
    assert!(kappa_from_central_charge(1.5).is_none());
    assert!(kappa_from_central_charge(-0.1).is_none());
}

#[test]
fn fourier_coefficient_of_pure_mode() {
    let n = 16;
    let v: Vec<f64> = (0..n).map(|j| (2.0 * 2.0 * std::f64::consts::PI * j as f64 / n as f64).cos()).collect();
    let a = fourier_coefficient(&v, n);
    assert!((a - c(0.5, 0.0)).norm() < 1e-14);
}

#[test]
fn injected_schwarzian_tail_recovers_charge() {
    let cc = 0.5;
    let f = ContourFunctional::schwarzian_tail(cc, 0.9, 512).unwrap();
    let window = fit_window(2.0, 40.0, 4, 5);
    let (fit, samples) = charge_from_functional(&f, &window, false, 8, &[1e-4, 1e-5], None).unwrap();
    assert_eq!(samples.len(), window.len());
    assert!((-fit.gamma.mean - cc).abs() < 1e-4 + 3.0 * fit.gamma.std_err, "{:?}", fit.gamma);
}

#[test]
fn inverted_route_matches_direct_derivative() {
    let base = vec![c(0.3, 0.1), c(-0.2, 0.25), c(0.05, -0.4), c(-0.3, -0.1)];
    let f = |p: &[Complex64]| {
        let x = (p[0] - p[1]) * (p[2] - p[3]) / ((p[0] - p[2]) * (p[1] - p[3]));
        x.re + 0.5 * x.norm_sqr()
    };
    let direct = PointFunctional::new(base.clone(), f);
    let inv_base: Vec<Complex64> = base.iter().map(|z| 1.0 / z).collect();
    let inverted = PointFunctional::new(inv_base, move |p: &[Complex64]| {
        let q: Vec<Complex64> = p.iter().map(|z| 1.0 / z).collect();
        f(&q)
    });
    let window = fit_window(1.5, 15.0, 3, 4);
    let ladder = [1e-4, 1e-5, 1e-6];
    let (_, a) = charge_from_functional(&direct, &window, false, 16, &ladder, None).unwrap();
    let (_, b) = charge_from_functional(&inverted, &window, true, 16, &ladder, None).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x.value - y.value).norm() < 1e-6 * x.value.norm().max(1e-3), "{:?} vs {:?}", x, y);
    }
}

#[test]
fn inverted_ellipse_exterior_is_reciprocal_of_ellipse() {
    let b = 2.0;
    let e = crate::conformal::EllipseSpec::new(c(0.0, 0.0), 1.0, 0.0, b).unwrap();
    let d = inverted_ellipse_exterior(b).unwrap();
    let curve = boundary_polyline(&d, 512).unwrap();
    for z in curve.points.iter().step_by(16) {
        assert!((e.implicit(1.0 / z) - 1.0).abs() < 1e-9, "{z}");
    }
}

#[test]
fn deform_domain_keeps_mobius_exact() {
    let d = DomainSpec::unit_disk();
    assert_eq!(deform_domain(&d, &AnalyticMap::Identity), d);
    let m = MobiusMap::affine(c(2.0, 0.0), c(0.5, 0.0)).unwrap();
    assert!(matches!(deform_domain(&d, &AnalyticMap::Mobius(m)), DomainSpec::MobiusImage { .. }));
}

#[test]
fn point_split_with_zero_weight_is_deterministic() {
    let l = LatticeSpec::with_resolution(8).unwrap();
    let seps = [0.4, 0.2, 0.1];
    let r = point_split_object(ComplexPoint::new(0.0, 0.0), &seps, 0.0, 0.5, &DomainSpec::unit_disk(), &l, &mc(5, 2, 10)).unwrap();
    for (row, d) in r.rows.iter().zip(seps) {
        assert_eq!(row.value.mean, -0.25 * d.ln());
        assert_eq!(row.value.std_err, 0.0);
    }
    assert_eq!(r.log_slope.mean, 0.0);
}

#[test]
fn point_split_rejects_bad_ladders() {
    let l = LatticeSpec::with_resolution(8).unwrap();
    let d = DomainSpec::unit_disk();
    let w = ComplexPoint::new(0.0, 0.0);
    assert!(point_split_object(w, &[0.1, 0.2], 1.0, 0.5, &d, &l, &mc(5, 1, 4)).is_err());
    assert!(point_split_object(w, &[2.5, 0.2], 1.0, 0.5, &d, &l, &mc(5, 1, 4)).is_err());
}

#[test]
fn point_split_counts_grow_as_points_merge() {
    let l = LatticeSpec::with_resolution(16).unwrap();
    let seps = [0.8, 0.2, 0.05];
    let r = point_split_object(ComplexPoint::new(0.0, 0.0), &seps, 1.0, 0.0, &DomainSpec::unit_disk(), &l, &mc(9, 2, 200)).unwrap();
    let n: Vec<f64> = r.rows.iter().map(|r| r.pair_count.mean).collect();
    assert!(n[0] <= n[1] && n[1] <= n[2], "{n:?}");
}

fn small_table() -> NormalizationTable {
    let ladder = Ladder::co_scaled(&[0.5, 0.4], 6).unwrap();
    calibrate_normalization(2.0, &ladder, 2.5, &mc(11, 2, 40)).unwrap()
}

#[test]
fn calibration_and_restriction_smoke() {
    let t = small_table();
    assert_eq!(t.rows.len(), 2);
    assert!(t.norm.mean > 0.0);
    assert!(t.rung_of(0.4).is_ok() && t.rung_of(0.3).is_err());
    let a = DomainSpec::disk(c(0.0, 0.0), 0.4);
    let rep = restriction_residual(&parity(c(0.7, 0.0)), &a, &DomainSpec::unit_disk(), &t, &mc(12, 2, 40)).unwrap();
    for r in &rep.rungs {
        assert_eq!(r.prelimit_ratio, r.conditional);
        assert_eq!(r.prelimit_ratio, r.joint_count as f64 / r.corridor_count as f64);
    }
}

#[test]
fn renormalized_prob_rejects_overlapping_support() {
    let t = small_table();
    let a = DomainSpec::disk(c(0.0, 0.0), 0.4);
    assert!(renormalized_prob(&parity(c(0.1, 0.0)), &a, &DomainSpec::unit_disk(), &t, &mc(1, 1, 4)).is_err());
}

fn small_stress(t: &NormalizationTable) -> StressSettings {
    StressSettings { n_theta: 8, eps_fat: t.rows[0].eps, rungs: Ladder::co_scaled(&[0.3, 0.25], 8).unwrap(), mc: mc(21, 2, 30) }
}

#[test]
fn stress_settings_validation() {
    let t = small_table();
    let mut s = small_stress(&t);
    s.n_theta = 6;
    assert!(s.validate().is_err());
    s.n_theta = 12;
    assert!(s.validate().is_ok());
    let mut s = small_stress(&t);
    s.eps_fat = 0.33;
    assert!(stress_insertion(&EventSpec::Trivial, ComplexPoint::new(0.0, 0.0), &DomainSpec::unit_disk(), &t, &s).is_err());
}

#[test]
fn stress_insertion_spectrum_is_pi_periodic() {
    let t = small_table();
    let s = small_stress(&t);
    let p = stress_insertion(&EventSpec::Trivial, ComplexPoint::new(0.0, 0.0), &DomainSpec::unit_disk(), &t, &s).unwrap();
    assert_eq!(p.rungs.len(), 2);
    for r in &p.rungs {
        assert_eq!(r.spectrum.len(), 8);
        for j in 0..4 {
            assert_eq!(r.spectrum[j].value, r.spectrum[j + 4].value);
        }
    }
}

#[test]
fn identity_transformation_residual_is_exactly_zero() {
    let t = small_table();
    let s = small_stress(&t);
    let rep = transformation_residual(
        &AnalyticMap::Identity,
        &EventSpec::Trivial,
        ComplexPoint::new(0.1, 0.0),
        &DomainSpec::unit_disk(),
        crate::stats::Estimate::exact(0.5),
        &t,
        &s,
    )
    .unwrap();
    assert_eq!(rep.residual.mean, Complex64::new(0.0, 0.0));
    assert_eq!(rep.schwarzian, Complex64::new(0.0, 0.0));
}

#[test]
fn monte_carlo_functionals_need_a_seed() {
    use crate::derivative::BoundaryFunctional;
    let l = LatticeSpec::with_resolution(4).unwrap();
    let f = ProbabilityFunctional::new(parity(c(0.2, 0.0)), DomainSpec::unit_disk(), l, mc(1, 1, 4)).unwrap();
    assert!(f.eval(&AnalyticMap::Identity, None).is_err());
    let a = f.eval(&AnalyticMap::Identity, Some(3)).unwrap();
    let b = f.eval(&AnalyticMap::Identity, Some(3)).unwrap();
    assert_eq!(a.value, b.value);
}

