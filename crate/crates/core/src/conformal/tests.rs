use super::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Derivatives 0..3 by the trapezoidal Cauchy integral on a small circle.
fn cauchy_derivs(f: &dyn Fn(Complex64) -> Complex64, z: Complex64, r: f64) -> [Complex64; 4] {
    let n = 96;
    let mut out = [c(0.0, 0.0); 4];
    for j in 0..n {
        let e = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
        let v = f(z + r * e);
        for (k, o) in out.iter_mut().enumerate() {
            *o += v * e.powi(-(k as i32)) / (n as f64) / r.powi(k as i32);
        }
    }
    [out[0], out[1], 2.0 * out[2], 6.0 * out[3]]
}

fn schwarzian_oracle(f: &dyn Fn(Complex64) -> Complex64, z: Complex64, r: f64) -> Complex64 {
    let d = cauchy_derivs(f, z, r);
    d[3] / d[1] - 1.5 * (d[2] / d[1]).powi(2)
}

fn random_mobius(rng: &mut ChaCha8Rng) -> MobiusMap {
    loop {
        let mut g = || c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        if let Ok(m) = MobiusMap::new(g(), g(), g(), g()) {
            return m;
        }
    }
}

/// Möbius maps within a bounded distance of the identity, so poles stay far.
fn tame_mobius(rng: &mut ChaCha8Rng) -> MobiusMap {
    let mut u = || c(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
    MobiusMap::new(c(1.0, 0.0) + u(), u(), u(), c(1.0, 0.0) + u()).unwrap()
}

fn fin(p: ComplexPoint) -> Complex64 {
    p.finite().expect("finite")
}

#[test]
fn mobius_identity_and_infinity() {
    let id = MobiusMap::identity();
    assert_eq!(id.apply(ComplexPoint::new(3.0, 4.0)), ComplexPoint::new(3.0, 4.0));
    let inv = MobiusMap::inversion();
    assert_eq!(inv.apply(ComplexPoint::Infinity), ComplexPoint::new(0.0, 0.0));
    assert_eq!(inv.apply(ComplexPoint::new(0.0, 0.0)), ComplexPoint::Infinity);
}

#[test]
fn mobius_normalized_and_composes() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let (m1, m2) = (random_mobius(&mut rng), random_mobius(&mut rng));
        assert!((m1.determinant() - 1.0).norm() < 1e-14);
        let z = c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let lhs = fin(m1.compose(&m2).apply(z.into()));
        let rhs = fin(m1.apply(m2.apply(z.into())));
        assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()), "{lhs} vs {rhs}");
        let back = fin(m1.inverse().apply(m1.apply(z.into())));
        assert!((back - z).norm() < 1e-10 * (1.0 + z.norm()));
    }
}

#[test]
fn schwarzian_closed_forms() {
    let sq = AnalyticMap::polynomial(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    assert!((schwarzian(&sq, ComplexPoint::new(1.0, 0.0)).unwrap() - c(-1.5, 0.0)).norm() < 1e-15);
    let cubic = AnalyticMap::polynomial(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    assert!((schwarzian(&cubic, ComplexPoint::new(0.0, 0.0)).unwrap() - c(6.0, 0.0)).norm() < 1e-15);
    let s = c(0.3, -1.1);
    let ex = AnalyticMap::Exp { scale: s };
    let got = schwarzian(&ex, ComplexPoint::new(0.2, 0.4)).unwrap();
    assert!((got + s * s / 2.0).norm() < 1e-13);
    assert!(matches!(schwarzian(&sq, ComplexPoint::new(0.0, 0.0)), Err(crate::Error::Domain(_))));
}

#[test]
fn schwarzian_of_simple_pole_mobius_is_zero() {
    let w0 = c(0.7, -0.2);
    let g = AnalyticMap::Mobius(MobiusMap::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), -w0).unwrap());
    assert_eq!(g.apply(w0.into()).unwrap(), ComplexPoint::Infinity);
    assert!(schwarzian(&g, w0.into()).unwrap().norm() < 1e-14);
}

#[test]
fn pole_branch_matches_moved_pole() {
    // g = (z² + 2z + 3)/(z − w0); M(ζ) = 1/(ζ − 7) makes M∘g finite at w0.
    let w0 = c(0.4, 0.9);
    let num = vec![c(3.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)];
    let den = vec![-w0, c(1.0, 0.0)];
    let g = AnalyticMap::Rational(Rational::new(num.clone(), den.clone()));
    let moved_den: Vec<Complex64> = vec![num[0] - 7.0 * den[0], num[1] - 7.0 * den[1], num[2]];
    let mg = AnalyticMap::Rational(Rational::new(den.clone(), moved_den));
    let lhs = schwarzian(&g, w0.into()).unwrap();
    let rhs = schwarzian(&mg, w0.into()).unwrap();
    assert!(rhs.norm() > 0.1);
    assert!((lhs - rhs).norm() < 1e-10 * rhs.norm(), "{lhs} vs {rhs}");
    let flipped = schwarzian_with_sign(&g, w0.into(), -POLE_BRANCH_SIGN).unwrap();
    assert!((flipped - rhs).norm() > 0.1);
}

#[test]
fn schwarzian_composition_law_against_cauchy_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let m = random_mobius(&mut rng);
        let s = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let f = AnalyticMap::Exp { scale: s };
        let q = AnalyticMap::polynomial(vec![
            c(0.0, 0.0),
            c(1.0, 0.0),
            c(rng.random_range(-0.3..0.3), 0.1),
            c(0.05, rng.random_range(-0.2..0.2)),
        ]);
        let g = q.clone().then(AnalyticMap::Mobius(m));
        let fg = g.clone().then(f.clone());
        let z = c(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
        let Ok(gz) = g.eval(z) else { continue };
        if !g.is_conformal_at(z) || (m.pole().finite().map(|p| (p - q.eval(z).unwrap()).norm() < 0.3).unwrap_or(false)) {
            continue;
        }
        let gp = g.jet(z).unwrap().d1;
        let lhs = schwarzian(&fg, z.into()).unwrap();
        let rhs = schwarzian(&f, gz.into()).unwrap() * gp * gp + schwarzian(&g, z.into()).unwrap();
        assert!((lhs - rhs).norm() < 1e-8 * (1.0 + lhs.norm()), "{lhs} vs {rhs}");
        let oracle = schwarzian_oracle(&|x| fg.eval(x).unwrap(), z, 0.05);
        assert!((lhs - oracle).norm() < 1e-8 * (1.0 + lhs.norm()), "{lhs} vs oracle {oracle}");
    }
}

#[test]
fn normal_form_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = random_mobius(&mut rng);
    let (gm, a) = normal_form(&AnalyticMap::Mobius(m), ComplexPoint::new(0.1, 0.2)).unwrap();
    assert!(a.norm() < 1e-12);
    for z in [c(0.3, -0.4), c(-1.0, 2.0)] {
        let back = fin(gm.apply(m.apply(z.into())));
        assert!((back - z).norm() < 1e-10);
        let inv = fin(m.inverse().apply(z.into()));
        assert!((fin(gm.apply(z.into())) - inv).norm() < 1e-10 * (1.0 + inv.norm()));
    }
    let cubic = AnalyticMap::polynomial(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    let (g, a) = normal_form(&cubic, ComplexPoint::new(0.0, 0.0)).unwrap();
    assert_eq!(a, c(6.0, 0.0));
    for z in [c(0.5, 0.5), c(-2.0, 1.0)] {
        assert!((fin(g.apply(z.into())) - z).norm() < 1e-15);
    }
}

/// Least-squares fit of the cubic coefficient of (G∘g)(z) − z on a circle.
fn fitted_cubic(g: &AnalyticMap, big_g: &MobiusMap, w: Complex64, r: f64) -> Complex64 {
    let n = 64;
    let mut acc = c(0.0, 0.0);
    for j in 0..n {
        let u = Complex64::from_polar(r, 2.0 * PI * j as f64 / n as f64);
        let v = fin(big_g.apply(g.eval(w + u).unwrap().into())) - (w + u);
        acc += v / u.powi(3);
    }
    acc / n as f64
}

#[test]
fn normal_form_cubic_coefficient_and_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let coeffs: Vec<Complex64> = (0..5)
            .map(|k| match k {
                1 => c(1.0, 0.0) + c(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)),
                _ => c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)),
            })
            .collect();
        let g = AnalyticMap::polynomial(coeffs);
        let w = c(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2));
        let (big_g, a) = normal_form(&g, w.into()).unwrap();
        let cubic = fitted_cubic(&g, &big_g, w, 1e-2);
        assert!((cubic - a / 6.0).norm() < 1e-8 * (1.0 + a.norm()), "{cubic} vs {}", a / 6.0);
        let res = |r: f64| {
            let u = Complex64::from_polar(r, 0.7);
            (fin(big_g.apply(g.eval(w + u).unwrap().into())) - (w + u) - a / 6.0 * u.powi(3)).norm()
        };
        let (r1, r2) = (4e-3, 2e-3);
        let order = (res(r1) / res(r2)).log2();
        assert!(order >= 3.9, "order {order}");
    }
}

#[test]
fn ellipse_examples() {
    let e = EllipseSpec::new(c(0.0, 0.0), 1.0, 0.0, 2.0).unwrap();
    assert!((fin(ellipse_boundary(&e, 0.0)) - c(0.375, 0.0)).norm() < 1e-15);
    let (p, q) = e.semi_axes();
    assert!((p - 0.375).abs() < 1e-15 && (q - 0.625).abs() < 1e-15);
    assert!((e.point(PI / 2.0) - c(0.0, 0.625)).norm() < 1e-15);
    let e2 = EllipseSpec::new(c(1.0, 2.0), 0.3, 0.4, 2.5).unwrap();
    let e3 = EllipseSpec { theta: 0.4 + PI, ..e2 };
    for k in 0..16 {
        let a = k as f64 * 0.3;
        assert!((e3.point(a) - e2.point(a + PI)).norm() < 1e-14);
        assert!((e2.implicit(e2.point(a)) - 1.0).abs() < 1e-13);
    }
}

#[test]
fn pinch_map_examples() {
    let b = 2.0;
    let g = pinch_map(c(0.0, 0.0), 1.0, 0.0).unwrap();
    assert!((g.eval(c(b / 4.0, 0.0)).unwrap() - c(b / 4.0 - 1.0 / (4.0 * b), 0.0)).norm() < 1e-15);
    let w = c(0.3, -0.2);
    let z = c(1.0, 1.0);
    let small = pinch_map(w, 1e-8, 0.7).unwrap().eval(z).unwrap();
    assert!((small - z).norm() < 1e-16 * 10.0);
    assert!(matches!(pinch_map(w, 0.1, 0.0).unwrap().apply(w.into()), Ok(ComplexPoint::Infinity)));
    let (eps, theta) = (0.2, 1.1);
    let e = EllipseSpec::new(w, eps, theta, b).unwrap();
    let g = pinch_map(w, eps, theta).unwrap();
    let mut worst: f64 = 0.0;
    for j in 0..4096 {
        let alpha = 2.0 * PI * j as f64 / 4096.0;
        let zc = w + Complex64::from_polar(b * eps / 4.0, alpha + theta);
        worst = worst.max((g.eval(zc).unwrap() - e.point(alpha)).norm());
    }
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn gen_scale_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let id = gen_scale_map(ComplexPoint::new(1.0, 1.0), ComplexPoint::new(-1.0, 0.5), 1.0).unwrap();
    let z = c(0.3, 0.8);
    assert!((fin(id.apply(z.into())) - z).norm() < 1e-14);
    for _ in 0..100 {
        let zp = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let z = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let l = rng.random_range(0.05..1.0);
        let m = gen_scale_map(zp.into(), z.into(), l).unwrap();
        assert!((fin(m.apply(z.into())) - z).norm() < 1e-10 * (1.0 + z.norm()));
        assert!((fin(m.apply(zp.into())) - zp).norm() < 1e-10 * (1.0 + zp.norm()));
    }
    // Coefficient limits with one fixed point at ∞.
    let x = c(0.7, -0.3);
    let m = gen_scale_map(ComplexPoint::Infinity, ComplexPoint::new(0.0, 0.0), 0.5).unwrap();
    assert!((fin(m.apply(x.into())) - x / 0.5).norm() < 1e-15);
    let m = gen_scale_map(ComplexPoint::new(0.0, 0.0), ComplexPoint::Infinity, 0.5).unwrap();
    assert!((fin(m.apply(x.into())) - x * 0.5).norm() < 1e-15);
    let far = 1e12;
    let m_far = gen_scale_map(ComplexPoint::new(far, 0.0), ComplexPoint::new(0.0, 0.0), 0.5).unwrap();
    assert!((fin(m_far.apply(x.into())) - x / 0.5).norm() < 1e-9);
    assert!(gen_scale_map(ComplexPoint::new(1.0, 0.0), ComplexPoint::new(1.0, 0.0), 0.5).is_err());
}

#[test]
fn ellipse_series_matches_boundary() {
    for b in [1.3, 1.5, 1.7, 2.0, 3.0, 6.0] {
        let s = unit_ellipse_series(b).unwrap();
        assert!(s.boundary_residual < 1e-12, "b={b}: {}", s.boundary_residual);
        assert!(s.coeffs[1].re > 0.0);
        assert!(s.radius > 1.0);
    }
}

proptest! {
    #[test]
    fn schwarzian_vanishes_on_mobius(
        coeffs in proptest::array::uniform8(-3.0f64..3.0),
        wr in -2.0f64..2.0, wi in -2.0f64..2.0,
    ) {
        let m = MobiusMap::new(c(coeffs[0], coeffs[1]), c(coeffs[2], coeffs[3]), c(coeffs[4], coeffs[5]), c(coeffs[6], coeffs[7]));
        prop_assume!(m.is_ok());
        let m = m.unwrap();
        prop_assume!(m.determinant().norm() > 0.5);
        let w = c(wr, wi);
        let g = AnalyticMap::Mobius(m);
        if let Ok(s) = schwarzian(&g, w.into()) {
            prop_assert!(s.norm() < 1e-12 * (1.0 + (m.c * w + m.d).norm().powi(-2)));
        }
    }

    #[test]
    fn inverse_law_on_conjugated_maps(
        seed in 0u64..1000,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m1 = tame_mobius(&mut rng);
        let m2 = tame_mobius(&mut rng);
        let s = c(rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8));
        let g = AnalyticMap::Mobius(m2).then(AnalyticMap::Exp { scale: s }).then(AnalyticMap::Mobius(m1));
        let w = c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
        prop_assume!(g.is_conformal_at(w));
        let jw = g.jet(w).unwrap();
        prop_assume!(jw.value.norm() < 50.0 && jw.d1.norm() > 1e-2 && jw.d1.norm() < 1e2);
        let z = jw.value;
        // s = g⁻¹ near z, evaluated by Newton from w.
        let inv = |y: Complex64| {
            let mut x = w + (y - z) / jw.d1;
            for _ in 0..60 {
                let j = g.jet(x).unwrap();
                x -= (j.value - y) / j.d1;
            }
            x
        };
        let r = 0.05 * jw.d1.norm();
        let sz = schwarzian_oracle(&inv, z, r);
        prop_assume!(sz.re.is_finite() && sz.im.is_finite());
        prop_assume!((g.eval(inv(z + r)).unwrap() - (z + r)).norm() < 1e-12 * (1.0 + z.norm()));
        let gw = schwarzian(&g, w.into()).unwrap();
        prop_assert!((gw + sz * jw.d1 * jw.d1).norm() < 1e-8 * (1.0 + gw.norm()), "{} vs {}", gw, -sz * jw.d1 * jw.d1);
    }
}

