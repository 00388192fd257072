use super::*;
use crate::domains::rasterize;
use crate::sampler::extract_loops;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn circle(center: Complex64, r: f64, n: usize) -> Vec<Complex64> {
    (0..n).map(|k| center + Complex64::from_polar(r, 2.0 * PI * k as f64 / n as f64)).collect()
}

fn ray_cast_inside(pts: &[Complex64], z: Complex64) -> bool {
    let n = pts.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        if (a.im > z.im) != (b.im > z.im) {
            let x = a.re + (z.im - a.im) / (b.im - a.im) * (b.re - a.re);
            if x > z.re {
                inside = !inside;
            }
        }
    }
    inside
}

fn disk_mask(spacing: f64) -> LatticeMask {
    rasterize(&DomainSpec::unit_disk(), &LatticeSpec::new(spacing).unwrap()).unwrap()
}

#[test]
fn concentric_circles_do_not_intersect() {
    let outer = BoundaryCurve::new(circle(c(0.0, 0.0), 2.0, 256));
    assert!(!curve_intersects(&circle(c(0.0, 0.0), 1.0, 256), &outer));
}

#[test]
fn circle_meets_box_through_origin() {
    let bx = BoundaryCurve::new(vec![c(-2.0, 0.0), c(2.0, 0.0), c(2.0, 0.5), c(-2.0, 0.5)]);
    assert!(curve_intersects(&circle(c(0.0, 0.0), 1.0, 256), &bx));
}

#[test]
fn crossing_examples() {
    let outer = BoundaryCurve::new(circle(c(0.0, 0.0), 0.9, 512));
    let inner = BoundaryCurve::new(circle(c(0.0, 0.0), 0.8, 512));
    assert!(eval_crossing(&LoopConfig::default(), &outer, &inner).unwrap());
    let transversal = LoopConfig { loops: vec![Loop::from_points(vec![c(0.7, -0.05), c(1.0, -0.05), c(1.0, 0.05), c(0.7, 0.05)])] };
    assert!(!eval_crossing(&transversal, &outer, &inner).unwrap());
    assert!(eval_crossing(&LoopConfig::default(), &inner, &outer).is_err());
}

#[test]
fn flipped_hexagon_far_from_corridor() {
    let mask = disk_mask(0.1);
    let centre = mask.site_index(0, 0).unwrap() as usize;
    let mut spins = vec![1i8; mask.len()];
    spins[centre] = -1;
    let cfg = extract_loops(&spins, &mask);
    assert_eq!(cfg.loops.len(), 1);
    assert_eq!(cfg.loops[0].len(), 6);
    let ev = EventSpec::Crossing { outer: DomainSpec::disk(c(0.0, 0.0), 0.9), inner: DomainSpec::disk(c(0.0, 0.0), 0.8) };
    assert_eq!(PreparedEvent::new(&ev, &mask).unwrap().eval(&cfg), Outcome::True);
    let outer = BoundaryCurve::new(circle(c(0.0, 0.0), 0.9, 512));
    let inner = BoundaryCurve::new(circle(c(0.0, 0.0), 0.8, 512));
    assert!(eval_crossing(&cfg, &outer, &inner).unwrap());
}

#[test]
fn half_flipped_wall_crosses_corridor() {
    let mask = disk_mask(0.1);
    let spins: Vec<i8> = mask.pos.iter().map(|p| if p.re > 0.01 { -1 } else { 1 }).collect();
    let cfg = extract_loops(&spins, &mask);
    let ev = EventSpec::Crossing { outer: DomainSpec::disk(c(0.0, 0.0), 0.9), inner: DomainSpec::disk(c(0.0, 0.0), 0.8) };
    let prepared = PreparedEvent::new(&ev, &mask).unwrap();
    assert_eq!(prepared.eval(&cfg), Outcome::False);
    let outer = BoundaryCurve::new(circle(c(0.0, 0.0), 0.9, 4096));
    let inner = BoundaryCurve::new(circle(c(0.0, 0.0), 0.8, 4096));
    assert!(!eval_crossing(&cfg, &outer, &inner).unwrap());
    assert_eq!(prepared.eval(&LoopConfig::default()), Outcome::True);
}

#[test]
fn nesting_violation_rejected_on_prepare() {
    let mask = disk_mask(0.1);
    let ev = EventSpec::Crossing { outer: DomainSpec::disk(c(0.0, 0.0), 0.5), inner: DomainSpec::disk(c(0.3, 0.0), 0.5) };
    assert!(PreparedEvent::new(&ev, &mask).is_err());
}

#[test]
fn winding_examples() {
    let u = circle(c(0.0, 0.0), 1.0, 128);
    assert!(winding_surrounds(&u, ComplexPoint::new(0.0, 0.0)).unwrap());
    assert!(!winding_surrounds(&u, ComplexPoint::new(3.0, 0.0)).unwrap());
    assert!(matches!(winding_surrounds(&u, ComplexPoint::new(1.0, 0.0)), Err(Error::PointOnLoop)));
}

#[test]
fn pair_count_and_parity_examples() {
    let empty = LoopConfig::default();
    let (z1, z2) = (ComplexPoint::new(-0.1, 0.0), ComplexPoint::new(0.1, 0.0));
    assert_eq!(pair_count(&empty, z1, z2).unwrap(), 0);
    assert_eq!(parity_spin_value(&empty, z1).unwrap(), 1);
    let both = LoopConfig { loops: vec![Loop::from_points(circle(c(0.0, 0.0), 0.5, 64))] };
    assert_eq!(pair_count(&both, z1, z2).unwrap(), 1);
    assert_eq!(parity_spin_value(&both, z1).unwrap(), -1);
    let one = LoopConfig { loops: vec![Loop::from_points(circle(c(-0.1, 0.0), 0.05, 64))] };
    assert_eq!(pair_count(&one, z1, z2).unwrap(), 0);
}

#[test]
fn surrounds_parity_disk_semantics() {
    let cfg = LoopConfig { loops: vec![Loop::from_points(circle(c(0.0, 0.0), 0.5, 64))] };
    let ev = |r: f64| PreparedEvent { node: prepare(&EventSpec::SurroundsParity { z0: c(0.0, 0.0), r }, &disk_mask(0.2)).unwrap() };
    assert_eq!(ev(0.0).eval(&cfg), Outcome::False);
    assert_eq!(ev(0.2).eval(&cfg), Outcome::False);
    // a loop cutting through the disk does not separate it from the boundary
    assert_eq!(ev(0.6).eval(&cfg), Outcome::True);
    let on = LoopConfig { loops: vec![Loop::from_points(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)])] };
    assert_eq!(ev(0.0).eval(&on), Outcome::Discarded);
}

#[test]
fn complement_and_conjunction() {
    let mask = disk_mask(0.2);
    let x = EventSpec::SurroundsParity { z0: c(0.0, 0.0), r: 0.0 };
    let both = x.clone().and(x.clone().complement());
    let cfg = LoopConfig { loops: vec![Loop::from_points(circle(c(0.0, 0.0), 0.5, 64))] };
    let p = PreparedEvent::new(&both, &mask).unwrap();
    assert_eq!(p.eval(&cfg), Outcome::False);
    assert_eq!(p.eval(&LoopConfig::default()), Outcome::False);
    assert_eq!(PreparedEvent::new(&EventSpec::Trivial, &mask).unwrap().eval(&cfg), Outcome::True);
    assert!(EventSpec::Trivial.and(EventSpec::Trivial).is_trivial());
}

#[test]
fn parity_equals_spin_per_sample() {
    let mask = disk_mask(0.15);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let spins: Vec<i8> = (0..mask.len()).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        let cfg = extract_loops(&spins, &mask);
        for (k, &p) in mask.pos.iter().enumerate() {
            assert_eq!(parity_spin_value(&cfg, ComplexPoint::Finite(p)).unwrap(), spins[k]);
        }
    }
}

#[test]
fn transformed_parity_disk_is_image_circle() {
    let g = MobiusMap::affine(Complex64::from_polar(2.0, 0.3), c(1.0, -1.0)).unwrap();
    let e = EventSpec::SurroundsParity { z0: c(0.2, 0.1), r: 0.1 }.transformed(&g).unwrap();
    let EventSpec::SurroundsParity { z0, r } = e else { panic!() };
    assert!((z0 - g.eval(c(0.2, 0.1)).unwrap()).norm() < 1e-12);
    assert!((r - 0.2).abs() < 1e-12);
    let inv = MobiusMap::inversion();
    assert!(EventSpec::SurroundsParity { z0: c(0.0, 0.0), r: 0.1 }.transformed(&inv).is_err());
}

#[test]
fn event_serde_round_trip() {
    let e = EventSpec::Crossing { outer: DomainSpec::unit_disk(), inner: DomainSpec::disk(c(0.0, 0.0), 0.5) }
        .and(EventSpec::PairCount { z1: c(0.1, 0.0), z2: c(-0.1, 0.0), min_count: 2 }.complement());
    let s = serde_json::to_string(&e).unwrap();
    assert_eq!(serde_json::from_str::<EventSpec>(&s).unwrap(), e);
    assert!(serde_json::from_str::<EventSpec>(r#"{"kind":"surrounds_parity","z0":[0.0,0.0],"r":0.1,"bogus":1}"#).is_err());
}

fn star(seed: u64, n: usize) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centre = c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
    (0..n)
        .map(|k| centre + Complex64::from_polar(rng.random_range(0.3..1.0), 2.0 * PI * k as f64 / n as f64))
        .collect()
}

proptest! {
    #[test]
    fn sweep_matches_bruteforce(s1 in 0u64..10_000, s2 in 0u64..10_000, dx in -1.5f64..1.5) {
        let a = star(s1, 24);
        let b: Vec<Complex64> = star(s2, 17).into_iter().map(|z| z + dx).collect();
        prop_assert_eq!(curve_intersects(&a, &BoundaryCurve::new(b.clone())), crate::geometry::polylines_intersect_bruteforce(&a, &b));
    }

    #[test]
    fn winding_matches_ray_cast(seed in 0u64..10_000, x in -1.5f64..1.5, y in -1.5f64..1.5) {
        let s = star(seed, 20);
        let z = c(x, y);
        prop_assume!(polyline_distance(&s, z) > 1e-9);
        prop_assert_eq!(winding_surrounds(&s, ComplexPoint::Finite(z)).unwrap(), ray_cast_inside(&s, z));
    }
}

#[test]
fn mapped_moves_marked_points_and_domains() {
    let g = crate::conformal::AnalyticMap::polynomial(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.1, 0.05)]);
    let e = EventSpec::SurroundsParity { z0: c(0.2, 0.1), r: 0.0 }
        .and(EventSpec::PairCount { z1: c(0.1, 0.0), z2: c(-0.3, 0.2), min_count: 1 }.complement());
    let m = e.mapped(&g).unwrap();
    let want = EventSpec::SurroundsParity { z0: g.eval(c(0.2, 0.1)).unwrap(), r: 0.0 }.and(
        EventSpec::PairCount { z1: g.eval(c(0.1, 0.0)).unwrap(), z2: g.eval(c(-0.3, 0.2)).unwrap(), min_count: 1 }
            .complement(),
    );
    assert_eq!(m, want);
    let x = EventSpec::corridor(&DomainSpec::disk(c(0.0, 0.0), 0.5), 0.2).unwrap().mapped(&g).unwrap();
    match x {
        EventSpec::Crossing { outer: DomainSpec::Mapped { .. }, inner: DomainSpec::Mapped { .. } } => {}
        other => panic!("{other:?}"),
    }
    assert!(EventSpec::SurroundsParity { z0: c(0.0, 0.0), r: 0.1 }.mapped(&g).is_err());
    assert_eq!(e.mapped(&crate::conformal::AnalyticMap::Identity).unwrap(), e);
}
