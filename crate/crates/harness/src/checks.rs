//! Deterministic identity checks against oracles built here, independent of
//! the cle-core internals they exercise.

use std::f64::consts::PI;

use cle_core::conformal::{
    normal_form, pinch_map, schwarzian, schwarzian_with_sign, AnalyticMap, ComplexPoint, EllipseSpec, MobiusMap,
    Rational, POLE_BRANCH_SIGN,
};
use cle_core::derivative::{
    charge_fit, circle_points, contour_integral_fn, ellipse_exterior_schwarzian, fit_window, fourier_mode_derivative,
    laurent_coefficient, ContourFunctional, DeltaSample, HalfPlanePointFunctional, PointFunctional,
    CLOSED_FORM_LADDER, DEFAULT_N_THETA,
};
use cle_core::domains::{rasterize, DomainSpec};
use cle_core::events::{pair_count, parity_spin_value, EventSpec, Outcome, PreparedEvent};
use cle_core::lattice::LatticeSpec;
use cle_core::sampler::{extract_loops, Loop, LoopConfig};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type SchwarzianFn = fn(&AnalyticMap, ComplexPoint) -> cle_core::Result<Complex64>;

/// The Schwarzian under test; swapped for a sign-flipped one by the canary.
#[derive(Clone, Copy)]
pub struct Kernel {
    pub schwarzian: SchwarzianFn,
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel { schwarzian }
    }
}

impl Kernel {
    pub fn canary() -> Self {
        Kernel { schwarzian: |g, w| schwarzian_with_sign(g, w, -POLE_BRANCH_SIGN) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub id: String,
    pub title: String,
    /// The identity the check exercises.
    pub tag: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(id: &str, title: &str, tag: &str, passed: bool, detail: String) -> Self {
        CheckOutcome { id: id.into(), title: title.into(), tag: tag.into(), passed, detail }
    }
}

pub const MOBIUS_TOL: f64 = 1e-12;
pub const LAW_TOL: f64 = 1e-8;
pub const NORMAL_FORM_TOL: f64 = 1e-8;
pub const NORMAL_FORM_ORDER: f64 = 3.9;
pub const ELLIPSE_TOL: f64 = 1e-10;
pub const CONTOUR_TOL: f64 = 1e-10;
pub const CONTOUR_POINTS: usize = 2048;
pub const CHARGE_EXACT_TOL: f64 = 1e-12;
pub const WARD_TOL: f64 = 1e-6;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn fin(p: ComplexPoint) -> Complex64 {
    p.finite().unwrap_or(c(f64::NAN, f64::NAN))
}

fn rand_c(rng: &mut ChaCha8Rng, r: f64) -> Complex64 {
    c(rng.random_range(-r..r), rng.random_range(-r..r))
}

/// Derivatives 0..3 by the trapezoidal Cauchy integral on a small circle.
pub fn cauchy_derivs(f: &dyn Fn(Complex64) -> Complex64, z: Complex64, r: f64) -> [Complex64; 4] {
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

pub fn schwarzian_oracle(f: &dyn Fn(Complex64) -> Complex64, z: Complex64, r: f64) -> Complex64 {
    let d = cauchy_derivs(f, z, r);
    d[3] / d[1] - 1.5 * (d[2] / d[1]).powi(2)
}

fn random_mobius(rng: &mut ChaCha8Rng, r: f64) -> MobiusMap {
    loop {
        if let Ok(m) = MobiusMap::new(rand_c(rng, r), rand_c(rng, r), rand_c(rng, r), rand_c(rng, r)) {
            return m;
        }
    }
}

fn tame_mobius(rng: &mut ChaCha8Rng) -> MobiusMap {
    let one = c(1.0, 0.0);
    loop {
        if let Ok(m) = MobiusMap::new(one + rand_c(rng, 0.3), rand_c(rng, 0.3), rand_c(rng, 0.3), one + rand_c(rng, 0.3)) {
            return m;
        }
    }
}

/// 1000 normalised Möbius maps at 10 points each, plus the pole branch:
/// {M∘g, w} = {g, w} for g with a simple pole at w and M(ζ) = 1/(ζ − k).
pub fn mobius_annihilation(k: &Kernel) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5c1);
    let (mut maps, mut evaluated, mut worst) = (0, 0usize, 0.0f64);
    let mut failures = Vec::new();
    while maps < 1000 {
        let (a, b, cc, d) = (rand_c(&mut rng, 3.0), rand_c(&mut rng, 3.0), rand_c(&mut rng, 3.0), rand_c(&mut rng, 3.0));
        if (a * d - b * cc).norm() < 0.5 {
            continue;
        }
        let Ok(m) = MobiusMap::new(a, b, cc, d) else { continue };
        maps += 1;
        let g = AnalyticMap::Mobius(m);
        for _ in 0..10 {
            let w = rand_c(&mut rng, 2.0);
            if (m.c * w + m.d).norm() < 0.5 {
                continue;
            }
            match (k.schwarzian)(&g, w.into()) {
                Ok(s) => {
                    evaluated += 1;
                    worst = worst.max(s.norm());
                }
                Err(e) => failures.push(format!("{w}: {e}")),
            }
        }
    }
    let (mut poles, mut pole_worst) = (0usize, 0.0f64);
    while poles < 100 {
        let w0 = rand_c(&mut rng, 1.0);
        let num = vec![rand_c(&mut rng, 2.0), rand_c(&mut rng, 2.0), c(1.0, 0.0) + rand_c(&mut rng, 0.5)];
        let pw = num[0] + num[1] * w0 + num[2] * w0 * w0;
        if pw.norm() < 0.5 {
            continue;
        }
        let kk = rand_c(&mut rng, 3.0);
        let den = vec![-w0, c(1.0, 0.0)];
        let g = AnalyticMap::Rational(Rational::new(num.clone(), den.clone()));
        // M∘g = (z − w0)/(P(z) − k(z − w0)).
        let moved = vec![num[0] - kk * den[0], num[1] - kk * den[1], num[2]];
        let mg = AnalyticMap::Rational(Rational::new(den, moved));
        let (Ok(lhs), Ok(rhs)) = ((k.schwarzian)(&g, w0.into()), (k.schwarzian)(&mg, w0.into())) else {
            failures.push(format!("pole at {w0} not evaluated"));
            poles += 1;
            continue;
        };
        poles += 1;
        pole_worst = pole_worst.max((lhs - rhs).norm() / (1.0 + rhs.norm()));
    }
    let passed = failures.is_empty() && worst < MOBIUS_TOL && pole_worst < MOBIUS_TOL * 100.0;
    CheckOutcome::new(
        "1",
        "Schwarzian annihilates Möbius",
        "schwarzian of a Möbius map vanishes; pole branch matches a moved pole",
        passed,
        format!(
            "{evaluated} points on {maps} maps, max |S| {worst:.3e} (tol {MOBIUS_TOL:e}); {poles} pole maps, max rel diff {pole_worst:.3e} (tol {:e}){}",
            MOBIUS_TOL * 100.0,
            if failures.is_empty() { String::new() } else { format!("; errors: {}", failures.join(", ")) }
        ),
    )
}

/// Composition law {f∘g} = {f}∘g · g'² + {g} and the inverse law
/// {g,w} = −{s,z} g'(w)², both against the Cauchy-integral oracle.
pub fn composition_and_inverse(k: &Kernel) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5c2);
    let (mut comp, mut comp_worst, mut tries) = (0usize, 0.0f64, 0usize);
    let mut errors = Vec::new();
    while comp < 100 && tries < 10_000 {
        tries += 1;
        let m = random_mobius(&mut rng, 2.0);
        let s = rand_c(&mut rng, 1.0);
        let f = AnalyticMap::Exp { scale: s };
        let q = AnalyticMap::polynomial(vec![
            c(0.0, 0.0),
            c(1.0, 0.0),
            c(rng.random_range(-0.3..0.3), 0.1),
            c(0.05, rng.random_range(-0.2..0.2)),
        ]);
        let g = q.clone().then(AnalyticMap::Mobius(m));
        let fg = g.clone().then(f.clone());
        let z = rand_c(&mut rng, 0.3);
        let Ok(gz) = g.eval(z) else { continue };
        let qz = q.eval(z).unwrap_or(c(f64::NAN, f64::NAN));
        if !g.is_conformal_at(z) || m.pole().finite().map(|p| (p - qz).norm() < 0.3).unwrap_or(false) {
            continue;
        }
        let Ok(jet) = g.jet(z) else { continue };
        let gp = jet.d1;
        let parts = ((k.schwarzian)(&fg, z.into()), (k.schwarzian)(&f, gz.into()), (k.schwarzian)(&g, z.into()));
        let (Ok(lhs), Ok(sf), Ok(sg)) = parts else {
            errors.push(format!("composition at {z} not evaluated"));
            continue;
        };
        let rhs = sf * gp * gp + sg;
        let oracle = schwarzian_oracle(&|x| fg.eval(x).unwrap_or(c(f64::NAN, f64::NAN)), z, 0.05);
        let scale = 1.0 + lhs.norm();
        comp_worst = comp_worst.max((lhs - rhs).norm() / scale).max((lhs - oracle).norm() / scale);
        comp += 1;
    }
    let (mut inv, mut inv_worst, mut tries) = (0usize, 0.0f64, 0usize);
    while inv < 100 && tries < 10_000 {
        tries += 1;
        let m1 = tame_mobius(&mut rng);
        let m2 = tame_mobius(&mut rng);
        let s = rand_c(&mut rng, 0.8);
        let g = AnalyticMap::Mobius(m2).then(AnalyticMap::Exp { scale: s }).then(AnalyticMap::Mobius(m1));
        let w = rand_c(&mut rng, 0.5);
        if !g.is_conformal_at(w) {
            continue;
        }
        let Ok(jw) = g.jet(w) else { continue };
        if !(jw.value.norm() < 50.0 && jw.d1.norm() > 1e-2 && jw.d1.norm() < 1e2) {
            continue;
        }
        let z = jw.value;
        // g⁻¹ near z by Newton from w.
        let inverse = |y: Complex64| {
            let mut x = w + (y - z) / jw.d1;
            for _ in 0..60 {
                match g.jet(x) {
                    Ok(j) => x -= (j.value - y) / j.d1,
                    Err(_) => return c(f64::NAN, f64::NAN),
                }
            }
            x
        };
        let r = 0.05 * jw.d1.norm();
        let sz = schwarzian_oracle(&inverse, z, r);
        if !(sz.re.is_finite() && sz.im.is_finite()) {
            continue;
        }
        let Ok(back) = g.eval(inverse(z + r)) else { continue };
        if (back - (z + r)).norm() >= 1e-12 * (1.0 + z.norm()) {
            continue;
        }
        let Ok(gw) = (k.schwarzian)(&g, w.into()) else {
            errors.push(format!("inverse law at {w} not evaluated"));
            continue;
        };
        inv_worst = inv_worst.max((gw + sz * jw.d1 * jw.d1).norm() / (1.0 + gw.norm()));
        inv += 1;
    }
    let passed = errors.is_empty() && comp == 100 && inv == 100 && comp_worst < LAW_TOL && inv_worst < LAW_TOL;
    CheckOutcome::new(
        "2",
        "Schwarzian composition and inverse laws",
        "{f∘g} = {f}∘g g'² + {g}; {g,w} = −{g⁻¹,g(w)} g'(w)²",
        passed,
        format!(
            "composition: {comp} maps, max rel err {comp_worst:.3e}; inverse: {inv} maps, max rel err {inv_worst:.3e} (tol {LAW_TOL:e}){}",
            if errors.is_empty() { String::new() } else { format!("; errors: {}", errors.join(", ")) }
        ),
    )
}

/// Cubic Taylor coefficient of (G∘g)(z) − z on a small circle.
fn fitted_cubic(g: &AnalyticMap, big_g: &MobiusMap, w: Complex64, r: f64) -> Complex64 {
    let n = 64;
    let mut acc = c(0.0, 0.0);
    for j in 0..n {
        let u = Complex64::from_polar(r, 2.0 * PI * j as f64 / n as f64);
        let v = fin(big_g.apply(g.eval(w + u).map(ComplexPoint::Finite).unwrap_or(ComplexPoint::Infinity))) - (w + u);
        acc += v / u.powi(3);
    }
    acc / n as f64
}

pub fn normal_form_cubic() -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5c3);
    let (mut worst, mut min_order, mut errors) = (0.0f64, f64::INFINITY, Vec::new());
    for _ in 0..50 {
        let coeffs: Vec<Complex64> = (0..5)
            .map(|k| if k == 1 { c(1.0, 0.0) + rand_c(&mut rng, 0.2) } else { rand_c(&mut rng, 0.5) })
            .collect();
        let g = AnalyticMap::polynomial(coeffs);
        let w = rand_c(&mut rng, 0.2);
        let Ok((big_g, a)) = normal_form(&g, w.into()) else {
            errors.push(format!("normal form at {w} failed"));
            continue;
        };
        let cubic = fitted_cubic(&g, &big_g, w, 1e-2);
        worst = worst.max((cubic - a / 6.0).norm() / (1.0 + a.norm()));
        let res = |r: f64| {
            let u = Complex64::from_polar(r, 0.7);
            let gz = g.eval(w + u).map(ComplexPoint::Finite).unwrap_or(ComplexPoint::Infinity);
            (fin(big_g.apply(gz)) - (w + u) - a / 6.0 * u.powi(3)).norm()
        };
        min_order = min_order.min((res(4e-3) / res(2e-3)).log2());
    }
    let passed = errors.is_empty() && worst < NORMAL_FORM_TOL && min_order >= NORMAL_FORM_ORDER;
    CheckOutcome::new(
        "3",
        "normal form cubic coefficient",
        "(G∘g)(z) = z + ({g,w}/6)(z−w)³ + O((z−w)⁴)",
        passed,
        format!(
            "50 maps, max rel err {worst:.3e} (tol {NORMAL_FORM_TOL:e}), min order {min_order:.3} (min {NORMAL_FORM_ORDER}){}",
            if errors.is_empty() { String::new() } else { format!("; errors: {}", errors.join(", ")) }
        ),
    )
}

pub fn pinch_map_ellipse() -> CheckOutcome {
    let ws = [c(0.0, 0.0), c(0.3, -0.2), c(-1.0, 2.0)];
    let epss = [0.01, 0.2, 1.0, 3.0];
    let thetas = [0.0, 1.1, PI / 2.0, 3.0, 5.5];
    let bs = [1.2, 2.0, 3.0, 6.0];
    let (mut worst, mut points, mut errors) = (0.0f64, 0usize, Vec::new());
    for &w in &ws {
        for &eps in &epss {
            for &theta in &thetas {
                for &b in &bs {
                    let (Ok(g), Ok(e)) = (pinch_map(w, eps, theta), EllipseSpec::new(w, eps, theta, b)) else {
                        errors.push(format!("({w}, {eps}, {theta}, {b})"));
                        continue;
                    };
                    let (p, q) = (eps * (b - 1.0 / b) / 4.0, eps * (b + 1.0 / b) / 4.0);
                    let rot = Complex64::from_polar(1.0, theta);
                    for j in 0..256 {
                        let alpha = 2.0 * PI * j as f64 / 256.0;
                        let zc = w + Complex64::from_polar(b * eps / 4.0, alpha + theta);
                        let Ok(gz) = g.eval(zc) else {
                            errors.push(format!("g({zc})"));
                            continue;
                        };
                        let want = w + rot * c(p * alpha.cos(), q * alpha.sin());
                        worst = worst.max((gz - want).norm()).max(e.boundary_distance(gz));
                        points += 1;
                    }
                }
            }
        }
    }
    let passed = errors.is_empty() && worst < ELLIPSE_TOL;
    CheckOutcome::new(
        "4",
        "pinch map sends the circle onto the ellipse",
        "g(w + (bε/4)e^{i(α+θ)}) = w + e^{iθ}(p cos α + i q sin α)",
        passed,
        format!(
            "{points} boundary points over a {}-cell grid, max distance {worst:.3e} (tol {ELLIPSE_TOL:e}){}",
            ws.len() * epss.len() * thetas.len() * bs.len(),
            if errors.is_empty() { String::new() } else { format!("; errors: {}", errors.join(", ")) }
        ),
    )
}

pub fn contour_residues() -> CheckOutcome {
    let n = CONTOUR_POINTS;
    let mut errs: Vec<(String, f64)> = Vec::new();
    let mut push = |name: &str, got: cle_core::Result<Complex64>, want: Complex64| {
        errs.push((name.to_owned(), got.map(|g| (g - want).norm()).unwrap_or(f64::INFINITY)));
    };
    push("1/z on the unit circle", contour_integral_fn(|z| 1.0 / z, &circle_points(c(0.0, 0.0), 1.0, n)), c(1.0, 0.0));
    let a = c(0.4, 0.1);
    push("3/(z-a) off-centre", contour_integral_fn(|z| 3.0 / (z - a), &circle_points(c(0.2, -0.1), 0.7, n)), c(3.0, 0.0));
    let mut cw = circle_points(c(0.0, 0.0), 2.0, n);
    cw.reverse();
    push("clockwise 1/z", contour_integral_fn(|z| 1.0 / z, &cw), c(-1.0, 0.0));
    let ellipse: Vec<Complex64> =
        (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).map(|t| c(0.3 + 1.5 * t.cos(), -0.2 + 0.7 * t.sin())).collect();
    for m in 0..8 {
        push(&format!("z^{m} on an ellipse"), contour_integral_fn(|z| z.powi(m), &ellipse), c(0.0, 0.0));
    }
    let (p, q) = (c(0.3, 0.2), c(1.5, -1.0));
    for m in -4..5i32 {
        let want = if m >= 0 { 1.0 / ((p - q) * q.powi(m + 1)) } else { p.powi(-m - 1) / (p - q) };
        push(&format!("Laurent m={m}"), laurent_coefficient(|z| 1.0 / ((z - p) * (z - q)), c(0.0, 0.0), 1.0, m, n), want);
    }
    let (name, worst) = errs.iter().cloned().fold((String::new(), 0.0), |acc, e| if e.1 > acc.1 { e } else { acc });
    CheckOutcome::new(
        "5",
        "contour integrals and residues",
        "(1/2πi)∮ f dz equals the enclosed residue",
        worst < CONTOUR_TOL,
        format!("{} integrals at {n} points, max err {worst:.3e} ({name}) (tol {CONTOUR_TOL:e})", errs.len()),
    )
}

pub fn charge_fit_round_trip() -> CheckOutcome {
    let mut parts = Vec::new();
    let mut ok = true;

    let gamma = -0.731;
    let exact: Vec<DeltaSample> = fit_window(2.0, 20.0, 6, 8)
        .into_iter()
        .map(|z| DeltaSample { z, value: gamma / 32.0 / z.powi(4), std_err: 0.0 })
        .collect();
    match charge_fit(&exact) {
        Ok(f) => {
            let e = (f.gamma.mean - gamma).abs();
            ok &= e < CHARGE_EXACT_TOL && !f.slow_tail;
            parts.push(format!("noiseless |dγ| {e:.3e} (tol {CHARGE_EXACT_TOL:e})"));
        }
        Err(e) => {
            ok = false;
            parts.push(format!("noiseless: {e}"));
        }
    }

    let gamma = 1.3;
    let beta = c(0.4, -0.25);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let noisy: Vec<DeltaSample> = fit_window(1.5, 30.0, 10, 12)
        .into_iter()
        .map(|z| {
            let exact = gamma / 32.0 / z.powi(4) + beta / z.powi(5);
            let noise = c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * (0.01 * 12f64.sqrt());
            DeltaSample { z, value: exact * (1.0 + noise), std_err: 0.01 * exact.norm() }
        })
        .collect();
    match charge_fit(&noisy) {
        Ok(f) => {
            let pull = (f.gamma.mean - gamma).abs() / f.gamma.std_err;
            ok &= pull < 3.0;
            parts.push(format!("noisy γ {:.5} ± {:.5}, pull {pull:.3} (gate 3)", f.gamma.mean, f.gamma.std_err));
        }
        Err(e) => {
            ok = false;
            parts.push(format!("noisy: {e}"));
        }
    }

    let cc = 0.5;
    let tail = ContourFunctional::schwarzian_tail(cc, 1.0, 1024).and_then(|f| {
        let mut worst = 0.0f64;
        let mut samples = Vec::new();
        for w in fit_window(3.0, 30.0, 5, 4) {
            let r = fourier_mode_derivative(&f, w, 4, &[1e-2], None)?;
            let exact = ellipse_exterior_schwarzian(w)? * (cc / 12.0);
            worst = worst.max((r.estimate.mean - exact).norm() / (1.0 + exact.norm()));
            samples.push(DeltaSample { z: w, value: r.estimate.mean, std_err: 1e-6 * r.estimate.mean.norm() });
        }
        let fit = charge_fit(&samples)?;
        let big = c(300.0, 200.0);
        let asym = (ellipse_exterior_schwarzian(big)? * (cc / 12.0) * big.powi(4) + cc / 32.0).norm();
        Ok((worst, fit, asym))
    });
    match tail {
        Ok((worst, fit, asym)) => {
            let d = (fit.gamma.mean + cc).abs();
            ok &= worst < 1e-10 && d <= 3.0 * fit.gamma.std_err + 1e-9 && asym < 1e-5;
            parts.push(format!(
                "tail: derivative err {worst:.3e}, γ {:.6} ± {:.2e} vs −c = {}, w⁴ tail err {asym:.2e}",
                fit.gamma.mean, fit.gamma.std_err, -cc
            ));
        }
        Err(e) => {
            ok = false;
            parts.push(format!("tail: {e}"));
        }
    }
    CheckOutcome::new(
        "6",
        "charge fit round trip",
        "γ is 32 times the w⁻⁴ coefficient; the ellipse tail gives −c",
        ok,
        parts.join("; "),
    )
}

fn neg_log_dist(z: &[Complex64]) -> f64 {
    -(z[0] - z[1]).norm().ln()
}

fn log_sigma(z: &[Complex64]) -> f64 {
    ((z[0] - z[1]).norm_sqr() / (z[0] - z[1].conj()).norm_sqr()).ln()
}

pub fn ward_oracles() -> CheckOutcome {
    let mut worst = 0.0f64;
    let mut errors = Vec::new();
    let (z1, z2) = (c(0.1, 0.3), c(-0.5, -0.2));
    let plane = PointFunctional::new(vec![z1, z2], neg_log_dist);
    for w in [c(2.0, 1.0), c(-1.0, 3.0), c(0.7, -0.9), c(0.0, -1.5)] {
        let want = -0.5 / ((w - z1) * (w - z2));
        match fourier_mode_derivative(&plane, w, DEFAULT_N_THETA, &CLOSED_FORM_LADDER, None) {
            Ok(r) => worst = worst.max((r.estimate.mean - want).norm()),
            Err(e) => errors.push(format!("plane {w}: {e}")),
        }
    }
    let (h1, h2) = (c(0.2, 0.5), c(-0.4, 1.1));
    match HalfPlanePointFunctional::new(vec![h1, h2], log_sigma) {
        Ok(f) => {
            let d1 = 1.0 / (h1 - h2) - 1.0 / (h1 - h2.conj());
            let d2 = -1.0 / (h1 - h2) + 1.0 / (h1.conj() - h2);
            for w in [c(1.0, 2.0), c(-2.0, 0.7), c(0.3, 3.0)] {
                let want = d1 / (w - h1) + d1.conj() / (w - h1.conj()) + d2 / (w - h2) + d2.conj() / (w - h2.conj());
                match fourier_mode_derivative(&f, w, DEFAULT_N_THETA, &CLOSED_FORM_LADDER, None) {
                    Ok(r) => worst = worst.max((r.estimate.mean - want).norm()),
                    Err(e) => errors.push(format!("half-plane {w}: {e}")),
                }
            }
        }
        Err(e) => errors.push(format!("half-plane functional: {e}")),
    }
    CheckOutcome::new(
        "7",
        "Ward oracles",
        "Δ_w of closed-form plane and half-plane functionals",
        errors.is_empty() && worst < WARD_TOL,
        format!(
            "7 points, max err {worst:.3e} (tol {WARD_TOL:e}){}",
            if errors.is_empty() { String::new() } else { format!("; errors: {}", errors.join(", ")) }
        ),
    )
}

/// Criteria 1 to 7, in order.
pub const DETERMINISTIC: [fn(&Kernel) -> CheckOutcome; 7] = [
    mobius_annihilation,
    composition_and_inverse,
    |_| normal_form_cubic(),
    |_| pinch_map_ellipse(),
    |_| contour_residues(),
    |_| charge_fit_round_trip(),
    |_| ward_oracles(),
];

pub fn deterministic_suite(k: &Kernel) -> Vec<CheckOutcome> {
    DETERMINISTIC.iter().map(|f| f(k)).collect()
}

fn circle(center: Complex64, r: f64, n: usize) -> Vec<Complex64> {
    (0..n).map(|k| center + Complex64::from_polar(r, 2.0 * PI * k as f64 / n as f64)).collect()
}

/// Loop extraction and event evaluation on hand-built spin fields.
pub fn events_suite() -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let run = || -> cle_core::Result<Vec<CheckOutcome>> {
        let lattice = LatticeSpec::new(0.1)?;
        let mask = rasterize(&DomainSpec::unit_disk(), &lattice)?;
        let crossing = EventSpec::Crossing {
            outer: DomainSpec::disk(c(0.0, 0.0), 0.9),
            inner: DomainSpec::disk(c(0.0, 0.0), 0.8),
        };
        let prepared = PreparedEvent::new(&crossing, &mask)?;
        let mut v = Vec::new();

        let mut spins = vec![1i8; mask.len()];
        let centre = mask.site_index(0, 0).map(|i| i as usize);
        if let Some(i) = centre {
            spins[i] = -1;
        }
        let cfg = extract_loops(&spins, &mask);
        let hex = cfg.loops.len() == 1 && cfg.loops[0].len() == 6 && prepared.eval(&cfg) == Outcome::True;
        v.push(CheckOutcome::new(
            "E1",
            "flipped hexagon",
            "one flipped site gives one six-edge loop away from the corridor",
            centre.is_some() && hex,
            format!("{} loops, first of length {}", cfg.loops.len(), cfg.loops.first().map(|l| l.len()).unwrap_or(0)),
        ));

        let spins: Vec<i8> = mask.pos.iter().map(|p| if p.re > 0.01 { -1 } else { 1 }).collect();
        let cfg = extract_loops(&spins, &mask);
        let wall = prepared.eval(&cfg) == Outcome::False && prepared.eval(&LoopConfig::default()) == Outcome::True;
        v.push(CheckOutcome::new(
            "E2",
            "half-flipped wall",
            "a wall through the corridor violates the no-crossing event",
            wall,
            format!("{} loops", cfg.loops.len()),
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mut mismatches, mut checked) = (0usize, 0usize);
        for _ in 0..10 {
            let spins: Vec<i8> = (0..mask.len()).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
            let cfg = extract_loops(&spins, &mask);
            for (k, &p) in mask.pos.iter().enumerate() {
                checked += 1;
                if parity_spin_value(&cfg, ComplexPoint::Finite(p))? != spins[k] {
                    mismatches += 1;
                }
            }
        }
        v.push(CheckOutcome::new(
            "E3",
            "parity equals spin",
            "(−1)^(loops around z) is the spin at z under + boundary",
            mismatches == 0,
            format!("{checked} sites, {mismatches} mismatches"),
        ));

        let (z1, z2) = (ComplexPoint::new(-0.1, 0.0), ComplexPoint::new(0.1, 0.0));
        let both = LoopConfig { loops: vec![Loop::from_points(circle(c(0.0, 0.0), 0.5, 64))] };
        let one = LoopConfig { loops: vec![Loop::from_points(circle(c(-0.1, 0.0), 0.05, 64))] };
        let counts = (
            pair_count(&LoopConfig::default(), z1, z2)?,
            pair_count(&both, z1, z2)?,
            pair_count(&one, z1, z2)?,
        );
        v.push(CheckOutcome::new(
            "E4",
            "pair count",
            "loops separating both points from the boundary",
            counts == (0, 1, 0),
            format!("counts {counts:?}, expected (0, 1, 0)"),
        ));
        Ok(v)
    };
    match run() {
        Ok(v) => out.extend(v),
        Err(e) => out.push(CheckOutcome::new("E", "event geometry", "event geometry", false, e.to_string())),
    }
    out
}
