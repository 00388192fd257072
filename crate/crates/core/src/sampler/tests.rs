use super::*;
use crate::events::{EventSpec, Outcome, PreparedEvent};
use crate::lattice::rotate_index;
use crate::stats::{binning_analysis, SampleTable};
use num_complex::Complex64;
use rand::SeedableRng;

fn hex_mask(radius: i32) -> LatticeMask {
    let mut sites = Vec::new();
    for i in -radius..=radius {
        for j in -radius..=radius {
            if (i.abs() + j.abs() + (i + j).abs()) / 2 <= radius {
                sites.push((i, j));
            }
        }
    }
    LatticeMask::from_sites(LatticeSpec::new(1.0).unwrap(), sites)
}

fn disk_mask(spacing: f64) -> LatticeMask {
    rasterize(&DomainSpec::unit_disk(), &LatticeSpec::new(spacing).unwrap()).unwrap()
}

fn cfg(algorithm: Algorithm, beta: f64, seed: u64) -> SamplerConfig {
    SamplerConfig { seed, sweeps_burnin: 100, thinning: 1, algorithm, beta }
}

fn unequal_pairs(mask: &LatticeMask, spins: &[i8]) -> usize {
    mask.bonds
        .iter()
        .filter(|b| spins[b[0] as usize] != if b[1] == NONE { 1 } else { spins[b[1] as usize] })
        .count()
}

#[test]
fn hex_mask_has_19_sites() {
    assert_eq!(hex_mask(2).len(), 19);
}

#[test]
fn infinite_temperature_magnetization_vanishes() {
    let mask = disk_mask(0.2);
    for alg in [Algorithm::Wolff, Algorithm::Metropolis] {
        let mut s = Sampler::new(&mask, cfg(alg, 0.0, 3), 0).unwrap();
        let m: Vec<f64> = (0..4000).map(|_| s.next_spin_config().magnetization()).collect();
        let b = binning_analysis(&m);
        assert!(b.mean.abs() < 3.0 * b.std_err, "{alg:?}: {} ± {}", b.mean, b.std_err);
    }
}

#[test]
fn zero_temperature_is_all_plus() {
    let mask = disk_mask(0.2);
    for alg in [Algorithm::Wolff, Algorithm::Metropolis] {
        let mut s = Sampler::new(&mask, cfg(alg, f64::INFINITY, 3), 0).unwrap();
        for _ in 0..5 {
            assert!(s.next_spins().iter().all(|&x| x == 1));
        }
    }
}

#[test]
fn energy_density_matches_enumeration() {
    let mask = hex_mask(2);
    let exact = exact_energy_density(&mask, BETA_C).unwrap();
    for (k, alg) in [Algorithm::Wolff, Algorithm::Metropolis].into_iter().enumerate() {
        let mut s = Sampler::new(&mask, cfg(alg, BETA_C, 10 + k as u64), 0).unwrap();
        let e: Vec<f64> = (0..40_000).map(|_| energy_density(&mask, s.next_spins())).collect();
        let b = binning_analysis(&e);
        assert!((b.mean - exact).abs() < 3.0 * b.std_err, "{alg:?}: {} ± {} vs {exact}", b.mean, b.std_err);
    }
}

#[test]
fn loop_structure_examples() {
    let mask = disk_mask(0.2);
    assert!(extract_loops(&vec![1; mask.len()], &mask).loops.is_empty());
    let mut one = vec![1i8; mask.len()];
    one[mask.site_index(1, 0).unwrap() as usize] = -1;
    let l = extract_loops(&one, &mask);
    assert_eq!(l.loops.len(), 1);
    assert_eq!(l.loops[0].len(), 6);
    assert!(l.loops[0].bbox.contains(mask.lattice.site_pos(1, 0), 0.0));
    // all −1 inside the + boundary: a single loop along the mask edge
    let all = extract_loops(&vec![-1; mask.len()], &mask);
    assert_eq!(all.loops.len(), 1);
    assert_eq!(all.total_length(), unequal_pairs(&mask, &vec![-1; mask.len()]));
}

#[test]
fn loop_length_equals_unequal_pairs() {
    let mask = disk_mask(0.1);
    let mut s = Sampler::new(&mask, cfg(Algorithm::Wolff, BETA_C, 8), 0).unwrap();
    for _ in 0..30 {
        let spins = s.next_spins().to_vec();
        let l = extract_loops(&spins, &mask);
        assert_eq!(l.total_length(), unequal_pairs(&mask, &spins));
        for lp in &l.loops {
            assert!(crate::geometry::signed_area(&lp.points) > 0.0);
            assert!(crate::geometry::is_simple(&lp.points));
            assert_eq!(lp.cells.len(), lp.points.len());
        }
    }
}

#[test]
fn loops_pairwise_disjoint_and_inside() {
    let mask = disk_mask(0.15);
    let half = 0.5 * mask.lattice.spacing + 1e-12;
    let mut s = Sampler::new(&mask, cfg(Algorithm::Wolff, BETA_C, 2), 0).unwrap();
    for _ in 0..10 {
        let l = extract_loops(s.next_spins(), &mask);
        for (a, la) in l.loops.iter().enumerate() {
            // every vertex is a bond midpoint of a mask site: inside the closed union of mask faces
            assert!(la.points.iter().all(|&z| mask.pos.iter().any(|p| (p - z).norm() <= half)));
            for lb in &l.loops[a + 1..] {
                assert!(!crate::geometry::polylines_intersect(&la.points, &lb.points));
            }
        }
    }
}

#[test]
fn depths_count_enclosing_loops() {
    let mask = disk_mask(0.1);
    let spins: Vec<i8> = mask
        .pos
        .iter()
        .map(|p| {
            let r = p.norm();
            if (0.25..0.55).contains(&r) {
                -1
            } else {
                1
            }
        })
        .collect();
    let l = extract_loops(&spins, &mask);
    assert_eq!(l.loops.len(), 2);
    let mut d: Vec<u32> = l.loops.iter().map(|x| x.depth).collect();
    d.sort();
    assert_eq!(d, vec![0, 1]);
}

#[test]
fn same_seed_same_stream() {
    let c = cfg(Algorithm::Wolff, BETA_C, 42);
    let d = DomainSpec::unit_disk();
    let lat = LatticeSpec::new(0.1).unwrap();
    let a = sample_loop_stream(&c, &d, &lat, 20).unwrap();
    let b = sample_loop_stream(&c, &d, &lat, 20).unwrap();
    assert_eq!(a, b);
    let other = sample_loop_stream(&SamplerConfig { seed: 43, ..c }, &d, &lat, 20).unwrap();
    assert_ne!(a, other);
}

#[test]
fn chains_independent_of_worker_count() {
    let mask = disk_mask(0.1);
    let c = cfg(Algorithm::Wolff, BETA_C, 4);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_chains(&mask, &c, 4, 10, |s, l| (s.iter().map(|&x| x as i64).sum::<i64>(), l.loops.len())).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn record_round_trip() {
    let c = cfg(Algorithm::Wolff, BETA_C, 5);
    let samples = sample_loop_stream(&c, &DomainSpec::unit_disk(), &LatticeSpec::new(0.1).unwrap(), 5).unwrap();
    let mut buf = Vec::new();
    write_loop_records(&mut buf, &samples).unwrap();
    assert_eq!(&buf[..8], b"CLELOOP\0");
    assert_eq!(buf[8], RECORD_VERSION);
    let back = read_loop_records(&buf[..]).unwrap();
    assert_eq!(back.len(), 5);
    for (k, (idx, loops)) in back.iter().enumerate() {
        assert_eq!(*idx, k as u64);
        let pts: Vec<Vec<Complex64>> = samples[k].loops.iter().map(|l| l.points.clone()).collect();
        assert_eq!(loops, &pts);
    }
    assert!(read_loop_records(&b"NOTLOOP\0\x01"[..]).is_err());
}

#[test]
fn rotated_lattice_gives_identical_spins() {
    let d = DomainSpec::disk(Complex64::new(0.2, 0.1), 0.8);
    let rot = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_3);
    let dr = d.clone().mobius_image(crate::conformal::MobiusMap::affine(rot, Complex64::new(0.0, 0.0)).unwrap());
    let lat = LatticeSpec::new(0.1).unwrap();
    let latr = LatticeSpec { rotation: std::f64::consts::FRAC_PI_3, ..lat };
    let (m, mr) = (rasterize(&d, &lat).unwrap(), rasterize(&dr, &latr).unwrap());
    assert_eq!(m.sites, mr.sites);
    // the relabelled lattice is the same point set: index map (i,j) → rotate_index
    for &(i, j) in m.sites.iter().take(20) {
        let (ri, rj) = rotate_index(i, j);
        assert!((latr.site_pos(i, j) - lat.site_pos(ri, rj)).norm() < 1e-12);
    }
    let c = cfg(Algorithm::Wolff, BETA_C, 9);
    let (mut s, mut sr) = (Sampler::new(&m, c, 0).unwrap(), Sampler::new(&mr, c, 0).unwrap());
    for _ in 0..10 {
        assert_eq!(s.next_spins(), sr.next_spins());
    }
}

#[test]
fn exact_enumeration_examples() {
    let mask = hex_mask(2);
    assert_eq!(enumerate_exact_mask(&mask, &EventSpec::Trivial, BETA_C).unwrap(), 1.0);
    // + boundary: only the all-plus configuration has no loop
    let n = mask.len() as i32;
    let p = enumerate_exact_with(&mask, 0.0, |l| Outcome::from_bool(!l.loops.is_empty())).unwrap();
    assert!((p - (1.0 - 0.5f64.powi(n))).abs() < 1e-15);
    let big = disk_mask(0.1);
    assert!(matches!(enumerate_exact_mask(&big, &EventSpec::Trivial, BETA_C), Err(Error::MaskTooLarge(_))));
}

#[test]
fn metropolis_and_wolff_agree_with_exact_crossing() {
    let mask = hex_mask(2);
    let ev = EventSpec::Crossing {
        outer: DomainSpec::disk(Complex64::new(0.0, 0.0), 1.3),
        inner: DomainSpec::disk(Complex64::new(0.0, 0.0), 0.7),
    };
    let exact = enumerate_exact_mask(&mask, &ev, BETA_C).unwrap();
    let prepared = PreparedEvent::new(&ev, &mask).unwrap();
    let mut est = Vec::new();
    for alg in [Algorithm::Wolff, Algorithm::Metropolis] {
        let out = run_chains(&mask, &cfg(alg, BETA_C, 21), 4, 5000, |_, l| prepared.eval(l).indicator()).unwrap();
        let t = SampleTable::new(vec!["x".into()], out);
        let e = t.mean(0).unwrap();
        assert!((e.mean - exact).abs() < 3.0 * e.std_err, "{alg:?}: {} ± {} vs {exact}", e.mean, e.std_err);
        est.push(e);
    }
    let comb = est[0].std_err.hypot(est[1].std_err);
    assert!((est[0].mean - est[1].mean).abs() < 3.0 * comb);
}

#[test]
fn binder_cumulant_is_in_range() {
    let u = binder_cumulant(8, BETA_C, 2000, 1, 0);
    assert!(u.mean > 0.3 && u.mean <= 2.0 / 3.0 + 3.0 * u.std_err, "{:?}", u);
    let cold = binder_cumulant(8, 1.0, 500, 1, 0);
    assert!((cold.mean - 2.0 / 3.0).abs() < 1e-3);
}

#[test]
fn chain_rng_streams_differ() {
    use rand::Rng;
    let (mut a, mut b) = (chain_rng(1, 0), chain_rng(1, 1));
    assert_ne!(a.random::<u64>(), b.random::<u64>());
    let mut c = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    assert_eq!(chain_rng(1, 0).random::<u64>(), c.random::<u64>());
}

#[test]
fn config_validation() {
    assert!(SamplerConfig { thinning: 0, ..Default::default() }.validate().is_err());
    assert!(SamplerConfig { beta: -1.0, ..Default::default() }.validate().is_err());
    assert!(SamplerConfig { beta: f64::NAN, ..Default::default() }.validate().is_err());
    let s = serde_json::to_string(&SamplerConfig::default()).unwrap();
    assert!(s.contains("\"wolff\""));
}
