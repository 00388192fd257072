use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn ar1(rho: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = 0.0;
    let s = (1.0 - rho * rho).sqrt();
    (0..n)
        .map(|_| {
            x = rho * x + s * gauss(&mut rng);
            x
        })
        .collect()
}

#[test]
fn neumaier_recovers_cancelled_term() {
    let mut s = NeumaierSum::default();
    for x in [1e16, 1.0, -1e16] {
        s.add(x);
    }
    assert_eq!(s.value(), 1.0);
}

#[test]
fn binning_tau_matches_ar1() {
    let rho: f64 = 0.8;
    let b = binning_analysis(&ar1(rho, 1 << 18, 3));
    let tau = (1.0 + rho) / (2.0 * (1.0 - rho));
    assert!((b.tau_int / tau - 1.0).abs() < 0.2, "tau {} vs {}", b.tau_int, tau);
    let b0 = binning_analysis(&ar1(0.0, 1 << 16, 4));
    assert!((b0.tau_int - 0.5).abs() < 0.1);
}

#[test]
fn halving_samples_inflates_error_by_sqrt2() {
    let x = ar1(0.5, 1 << 17, 9);
    let full = binning_analysis(&x).std_err;
    let half = binning_analysis(&x[..x.len() / 2]).std_err;
    let r = half / full / 2f64.sqrt();
    assert!((r - 1.0).abs() < 0.2, "ratio {r}");
}

#[test]
fn jackknife_of_mean_is_block_standard_error() {
    let x = ar1(0.3, 4000, 1);
    let b = 40;
    let j = jackknife_blocks(&[&x], b, |m| m[0]);
    let means: Vec<f64> = x.chunks(100).map(|c| c.iter().sum::<f64>() / 100.0).collect();
    let mu = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (b as f64 * (b as f64 - 1.0));
    assert!((j.mean - mu).abs() < 1e-12);
    assert!((j.std_err - var.sqrt()).abs() < 1e-12);
}

#[test]
fn sample_table_blocks_respect_chains_and_nan() {
    let t = SampleTable::new(vec!["a".into(), "b".into()], vec![vec![1.0, f64::NAN, 3.0, 1.0], vec![5.0, 1.0, 7.0, 1.0]]);
    assert_eq!(t.rows(), 4);
    assert_eq!(t.discarded(1), 1);
    assert_eq!(t.plain_mean(0), 4.0);
    assert_eq!(t.plain_mean(1), 1.0);
    let blocks = t.blocks(4);
    assert_eq!(blocks.len(), 4);
    assert_eq!(blocks[0][1], (0.0, 0));
}

#[test]
fn constant_ratio_has_zero_jackknife_error() {
    let t = SampleTable::new(vec!["n".into(), "d".into()], vec![(0..200).flat_map(|k| [k as f64, 2.0 * k as f64]).collect()]);
    let e = t.jackknife(|m| m[0] / m[1]).unwrap();
    assert!((e.mean - 0.5).abs() < 1e-15);
    assert!(e.std_err < 1e-15);
}

#[test]
fn empty_column_is_estimation_error() {
    let t = SampleTable::new(vec!["a".into()], vec![vec![f64::NAN; 10]]);
    assert!(t.mean(0).is_err());
    assert!(t.jackknife(|m| m[0]).is_err());
}

#[test]
fn least_squares_recovers_exact_line() {
    let x: Vec<Vec<f64>> = (0..5).map(|k| vec![1.0, k as f64]).collect();
    let y: Vec<f64> = (0..5).map(|k| 2.0 - 0.5 * k as f64).collect();
    let f = weighted_least_squares(&x, &y, &[0.1; 5]).unwrap();
    assert!((f.coef[0] - 2.0).abs() < 1e-12 && (f.coef[1] + 0.5).abs() < 1e-12);
    assert!(f.chi2 < 1e-20);
}

#[test]
fn extrapolation_noiseless_power_law() {
    let rows: Vec<EpsRow> = [0.4, 0.2, 0.1, 0.05].iter().map(|&e| EpsRow { eps: e, value: 0.3 + 2.0 * e.powf(1.5), std_err: 0.0 }).collect();
    let r = extrapolate(&rows).unwrap();
    assert_eq!(r.model, "power-law");
    assert!((r.exponent - 1.5).abs() < 1e-9);
    assert!((r.value - 0.3).abs() < 1e-10, "{}", r.value);
    assert!((r.curve(0.2) - rows[1].value).abs() < 1e-10);
}

#[test]
fn extrapolation_two_and_one_point() {
    let two = [EpsRow { eps: 0.2, value: 1.2, std_err: 0.01 }, EpsRow { eps: 0.1, value: 1.1, std_err: 0.01 }];
    let r = extrapolate(&two).unwrap();
    assert_eq!(r.model, "linear-in-eps");
    assert!((r.value - 1.0).abs() < 1e-12);
    assert!((r.error - (0.01f64.powi(2) * 4.0 + 0.01f64.powi(2)).sqrt()).abs() < 1e-12);
    let one = extrapolate(&two[..1]).unwrap();
    assert_eq!((one.value, one.error), (1.2, 0.01));
    assert!(extrapolate(&[]).is_err());
}

#[test]
fn extrapolation_error_coverage() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut inside = 0;
    let trials = 400;
    for _ in 0..trials {
        let rows: Vec<EpsRow> = [0.4, 0.3, 0.2, 0.1]
            .iter()
            .map(|&e| EpsRow { eps: e, value: 1.0 - e + 0.01 * gauss(&mut rng), std_err: 0.01 })
            .collect();
        let r = extrapolate(&rows).unwrap();
        assert!(r.error >= r.stat_error);
        if (r.value - 1.0).abs() < 3.0 * r.error {
            inside += 1;
        }
    }
    assert!(inside as f64 / trials as f64 > 0.95, "coverage {inside}/{trials}");
}

#[test]
fn complex_extrapolation_matches_componentwise() {
    let rows: Vec<ComplexEpsRow> = [0.3, 0.2, 0.1]
        .iter()
        .map(|&e| ComplexEpsRow {
            eps: e,
            estimate: ComplexEstimate::from_cov(Complex64::new(1.0 + e, -2.0 + 3.0 * e), [[1e-4, 0.0], [0.0, 1e-4]], 100),
        })
        .collect();
    let c = extrapolate_complex(&rows).unwrap();
    assert!((c.value - Complex64::new(1.0, -2.0)).norm() < 1e-10);
    let re: Vec<EpsRow> = rows.iter().map(|r| EpsRow { eps: r.eps, value: r.estimate.mean.re, std_err: 1e-2 }).collect();
    assert!((extrapolate(&re).unwrap().value - c.value.re).abs() < 1e-10);
}

#[test]
fn complex_pull_uses_covariance() {
    let e = ComplexEstimate::from_cov(Complex64::new(1.0, 1.0), [[1.0, 0.0], [0.0, 4.0]], 1);
    assert!((e.pull(Complex64::new(0.0, 1.0)) - 1.0).abs() < 1e-12);
    assert!((e.pull(Complex64::new(1.0, 0.0)) - 0.5).abs() < 1e-12);
}

proptest! {
    #[test]
    fn moment_merge_is_order_insensitive(xs in proptest::collection::vec(-1e3f64..1e3, 1..200), cut in 0usize..200) {
        let cut = cut.min(xs.len());
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..cut].iter().for_each(|&x| a.push(x));
        xs[cut..].iter().for_each(|&x| b.push(x));
        let mut ab = a;
        ab.merge(&b);
        let mut ba = b;
        ba.merge(&a);
        prop_assert_eq!(ab.n, xs.len() as u64);
        prop_assert!((ab.mean() - ba.mean()).abs() <= 1e-12 * (1.0 + ab.mean().abs()));
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        prop_assert!((ab.mean() - all.mean()).abs() <= 1e-12 * (1.0 + all.mean().abs()));
    }
}
