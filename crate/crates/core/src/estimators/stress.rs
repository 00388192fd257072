use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::functionals::{DerivativeSettings, ProbabilityFunctional};
use super::renorm::NormalizationTable;
use super::{event_table, finite_point, nested, Ladder, McSettings};
use crate::conformal::{ComplexPoint, EllipseSpec};
use crate::derivative::{fourier_mode_derivative, FourierModeDerivative};
use crate::domains::{DomainSpec, PreparedDomain};
use crate::error::{Error, Result};
use crate::events::EventSpec;
use crate::stats::{extrapolate_complex, ComplexEpsRow, ComplexEstimate, ComplexExtrapolation, Estimate, SampleTable};

const TAG_STRESS: u64 = 11;

/// Ellipse-size ladder and angular resolution of the stress insertion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressSettings {
    pub n_theta: usize,
    /// Corridor width fraction; must be a calibrated rung of the table.
    pub eps_fat: f64,
    /// Ellipse sizes ε with co-scaled lattice resolutions.
    pub rungs: Ladder,
    pub mc: McSettings,
}

impl StressSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_theta < 8 || self.n_theta % 4 != 0 {
            return Err(Error::Domain(format!("n_theta = {} must be ≥ 8 and divisible by 4", self.n_theta)));
        }
        self.rungs.validate()?;
        self.mc.validate()
    }
}

/// e^{−imθ_j} for θ_j = 2πj/n; indices j and j + n/2 share one value.
fn phase(m: i32, j: usize, n: usize) -> Complex64 {
    let h = n / 2;
    Complex64::from_polar(1.0, -(m as f64) * 2.0 * PI * (j % h) as f64 / n as f64)
}

/// (1/n)Σ_j e^{−2iθ_j} v_j over all n angles, summed in (θ, θ+π) pairs.
pub fn fourier_coefficient(values: &[f64], n: usize) -> Complex64 {
    fourier_mode(values, n, 2)
}

fn fourier_mode(values: &[f64], n: usize, m: i32) -> Complex64 {
    let h = n / 2;
    let mut s = Complex64::new(0.0, 0.0);
    for j in 0..h {
        s += phase(m, j, n) * values[j] + phase(m, j + h, n) * values[j + h];
    }
    s / n as f64
}

/// The same coefficient from the first n/2 angles with doubled weight.
pub fn fourier_coefficient_half(half: &[f64], n: usize) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for (j, v) in half.iter().enumerate() {
        let t = phase(2, j, n) * *v;
        s += 2.0 * t;
    }
    s / n as f64
}

fn doubled(half: &[f64]) -> Vec<f64> {
    half.iter().chain(half.iter()).copied().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaSample {
    pub theta: f64,
    /// P^ren(X; E(w,ε,θ))_C at the calibrated corridor width.
    pub value: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressRung {
    pub eps: f64,
    pub resolution: u32,
    pub estimate: ComplexEstimate,
    /// All n_theta angles; θ and θ+π carry the same value.
    pub spectrum: Vec<ThetaSample>,
    /// fourier_coefficient of the spectrum values.
    pub coefficient: Complex64,
    /// Mode-2 and mode-4 Fourier coefficients of the spectrum.
    pub mode2: ComplexEstimate,
    pub mode4: ComplexEstimate,
    pub n_samples: usize,
    pub discarded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressInsertion {
    pub w: Complex64,
    pub n_theta: usize,
    pub eps_fat: f64,
    pub rungs: Vec<StressRung>,
    pub result: ComplexExtrapolation,
    /// The mode-4 decay predicts non-negligible power at mode n_theta − 2.
    pub aliasing_warning: bool,
}

impl StressInsertion {
    pub fn estimate(&self) -> ComplexEstimate {
        self.result.estimate()
    }
}

/// Covariance of a·v for a complex constant a.
pub(crate) fn scale_cov(cov: [[f64; 2]; 2], a: Complex64) -> [[f64; 2]; 2] {
    let m = [[a.re, -a.im], [a.im, a.re]];
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[i][j] += m[i][k] * cov[k][l] * m[j][l];
                }
            }
        }
    }
    out
}

pub(crate) fn add_cov(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

/// Adds the relative error of an independent multiplicative factor.
fn with_factor_error(e: ComplexEstimate, rel: f64) -> ComplexEstimate {
    let v = e.mean;
    let extra = [[v.re * v.re, v.re * v.im], [v.re * v.im, v.im * v.im]];
    let r2 = rel * rel;
    let cov = add_cov(e.cov, [[extra[0][0] * r2, extra[0][1] * r2], [extra[1][0] * r2, extra[1][1] * r2]]);
    ComplexEstimate::from_cov(e.mean, cov, e.n_samples)
}

struct Geometry {
    w: Complex64,
    factor: Estimate,
    b: f64,
}

fn check_geometry(x: &EventSpec, w: ComplexPoint, c: &DomainSpec, table: &NormalizationTable, st: &StressSettings) -> Result<Geometry> {
    st.validate()?;
    x.validate()?;
    let w = finite_point(w)?;
    let pc = PreparedDomain::new(c)?;
    if !pc.contains(ComplexPoint::Finite(w)) {
        return Err(Error::Domain(format!("w = {w} is not in C")));
    }
    let b = table.b;
    let largest = st.rungs.rungs[0].eps * (b + 1.0 / b) / 4.0;
    if !nested(&DomainSpec::disk(w, largest * 1.02), c)? {
        return Err(Error::Domain("the largest ellipse does not fit inside C".into()));
    }
    for z in x.support().sample_points(128)? {
        if (z - w).norm() <= largest * 1.05 {
            return Err(Error::Domain(format!("event support point {z} is too close to w")));
        }
    }
    let factor = table.factor(table.rung_of(st.eps_fat)?)?;
    Ok(Geometry { w, factor, b })
}

fn ellipse_events(g: &Geometry, eps: f64, n: usize, eps_fat: f64) -> Result<Vec<EventSpec>> {
    (0..n / 2)
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / n as f64;
            EventSpec::corridor(&DomainSpec::ellipse(EllipseSpec::new(g.w, eps, theta, g.b)?), eps_fat)
        })
        .collect()
}

fn spectrum(t: &SampleTable, cols: std::ops::Range<usize>, factor: f64, n: usize) -> Result<Vec<ThetaSample>> {
    let half: Vec<Estimate> = cols.map(|k| t.mean(k)).collect::<Result<_>>()?;
    Ok((0..n)
        .map(|j| {
            let e = half[j % (n / 2)];
            ThetaSample { theta: 2.0 * PI * j as f64 / n as f64, value: factor * e.mean, std_err: factor * e.std_err }
        })
        .collect())
}

/// P₁(X; w)_C = −lim (8/(πε²)) ∫dθ e^{−2iθ} P^ren(X; E(w,ε,θ))_C by an
/// n_theta-point quadrature per ellipse size, all angles on one stream.
pub fn stress_insertion(
    x: &EventSpec,
    w: ComplexPoint,
    c: &DomainSpec,
    table: &NormalizationTable,
    st: &StressSettings,
) -> Result<StressInsertion> {
    let g = check_geometry(x, w, c, table, st)?;
    let n = st.n_theta;
    let h = n / 2;
    let f = g.factor.mean;
    let rel = g.factor.std_err / f;
    let mut rungs = Vec::with_capacity(st.rungs.rungs.len());
    for (k, r) in st.rungs.rungs.iter().enumerate() {
        let events: Vec<EventSpec> = ellipse_events(&g, r.eps, n, st.eps_fat)?
            .into_iter()
            .map(|e| if x.is_trivial() { e } else { x.clone().and(e) })
            .collect();
        let t = event_table(c, &r.lattice()?, &events, &st.mc.with_stream(TAG_STRESS + 16 * k as u64))?;
        let pref = -16.0 * f / (r.eps * r.eps);
        let est = t.jackknife_complex(|m| pref * fourier_coefficient(&doubled(&m[..h]), n))?;
        if !(est.mean.re.is_finite() && est.mean.im.is_finite() && est.std_err.re.is_finite()) {
            return Err(Error::Estimation(format!(
                "stress estimate at ε = {} is not finite ({} of {} samples discarded)",
                r.eps,
                (0..h).map(|k| t.discarded(k)).max().unwrap_or(0),
                t.rows()
            )));
        }
        let mode2 = t.jackknife_complex(|m| fourier_mode(&doubled(&m[..h]), n, 2))?;
        let mode4 = t.jackknife_complex(|m| fourier_mode(&doubled(&m[..h]), n, 4))?;
        let spectrum = spectrum(&t, 0..h, f, n)?;
        let coefficient = fourier_coefficient(&spectrum.iter().map(|s| s.value).collect::<Vec<_>>(), n);
        rungs.push(StressRung {
            eps: r.eps,
            resolution: r.resolution,
            estimate: with_factor_error(est, rel),
            spectrum,
            coefficient,
            mode2,
            mode4,
            n_samples: t.rows(),
            discarded: (0..h).map(|k| t.discarded(k)).max().unwrap_or(0),
        });
    }
    let result = extrapolate_complex(&rungs.iter().map(|r| ComplexEpsRow { eps: r.eps, estimate: r.estimate }).collect::<Vec<_>>())?;
    let aliasing_warning = rungs.iter().any(|r| aliasing(r, n));
    Ok(StressInsertion { w: g.w, n_theta: n, eps_fat: st.eps_fat, rungs, result, aliasing_warning })
}

/// Mode-4 significant and its decay rate extrapolated to mode n − 2 above 1%
/// of the mode-2 amplitude.
fn aliasing(r: &StressRung, n: usize) -> bool {
    let (a2, a4) = (r.mode2.mean.norm(), r.mode4.mean.norm());
    if a4 <= 3.0 * r.mode4.abs_err() || a2 == 0.0 {
        return false;
    }
    (a4 / a2).powi((n as i32 - 4) / 2) > 0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WardReport {
    /// P₁(X;w)_C − P₁(w)_C·P(X)_C, extrapolated; the P₁(w) term is absent on the proxy.
    pub insertion: ComplexExtrapolation,
    pub prob: Estimate,
    pub derivative: FourierModeDerivative,
    pub residual: ComplexEstimate,
    pub plane: bool,
}

/// P₁(X;w)_C − P₁(w)_C P(X)_C − Δ_w P(X)_C. The insertion terms share one
/// stream per ellipse size; Δ_w comes from the conformal derivative of the
/// Monte Carlo probability functional.
pub fn ward_residual(
    x: &EventSpec,
    w: ComplexPoint,
    c: &DomainSpec,
    table: &NormalizationTable,
    st: &StressSettings,
    deriv: &DerivativeSettings,
) -> Result<WardReport> {
    let g = check_geometry(x, w, c, table, st)?;
    let plane = matches!(c, DomainSpec::SphereProxy { .. });
    let n = st.n_theta;
    let h = n / 2;
    let f = g.factor.mean;
    let rel = g.factor.std_err / f;
    let mut rows = Vec::with_capacity(st.rungs.rungs.len());
    let mut prob = None;
    for (k, r) in st.rungs.rungs.iter().enumerate() {
        let ell = ellipse_events(&g, r.eps, n, st.eps_fat)?;
        let mut events: Vec<EventSpec> = ell.iter().map(|e| x.clone().and(e.clone())).collect();
        events.extend(ell);
        events.push(x.clone());
        let t = event_table(c, &r.lattice()?, &events, &st.mc.with_stream(TAG_STRESS + 16 * k as u64))?;
        let pref = -16.0 * f / (r.eps * r.eps);
        let est = t.jackknife_complex(|m| {
            let joint = fourier_coefficient(&doubled(&m[..h]), n);
            if plane {
                pref * joint
            } else {
                pref * (joint - fourier_coefficient(&doubled(&m[h..2 * h]), n) * m[2 * h])
            }
        })?;
        rows.push(ComplexEpsRow { eps: r.eps, estimate: with_factor_error(est, rel) });
        prob = Some(t.mean(2 * h)?);
    }
    let insertion = extrapolate_complex(&rows)?;
    let lattice = crate::lattice::LatticeSpec::with_resolution(deriv.resolution)?;
    let func = ProbabilityFunctional::new(x.clone(), c.clone(), lattice, deriv.mc)?;
    let derivative = fourier_mode_derivative(&func, g.w, deriv.n_theta, &deriv.ladder, Some(deriv.mc.sampler.seed))?;
    let ins = insertion.estimate();
    let cov = add_cov(ins.cov, derivative.estimate.cov);
    let residual = ComplexEstimate::from_cov(ins.mean - derivative.estimate.mean, cov, ins.n_samples);
    Ok(WardReport { insertion, prob: prob.expect("ladder is nonempty"), derivative, residual, plane })
}
