use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::functionals::{DerivativeSettings, RelativeZFunctional};
use super::renorm::{image_domain, NormalizationTable};
use super::stress::{add_cov, scale_cov, stress_insertion, StressInsertion, StressSettings};
use super::{estimate_prob, finite_point, nested};
use crate::conformal::{elongation_map, schwarzian, AnalyticMap, ComplexPoint, MobiusMap};
use crate::derivative::{charge_fit, fit_window, fourier_mode_derivative, BoundaryFunctional, ChargeFit, DeltaSample, FourierModeDerivative};
use crate::domains::{DomainSpec, PreparedDomain};
use crate::error::{Error, Result};
use crate::events::EventSpec;
use crate::lattice::LatticeSpec;
use crate::stats::{ComplexEstimate, Estimate};

/// Δ_z F at every window point and the charge fit through them. With
/// `inverted`, F lives in the 1/z picture: Δ_{1/z}F is measured and
/// Δ_z = z⁻⁴ Δ_{1/z}F.
pub fn charge_from_functional<F: BoundaryFunctional + ?Sized>(
    f: &F,
    window: &[Complex64],
    inverted: bool,
    n_theta: usize,
    ladder: &[f64],
    seed: Option<u64>,
) -> Result<(ChargeFit, Vec<DeltaSample>)> {
    let mut samples = Vec::with_capacity(window.len());
    for &z in window {
        let w = if inverted { 1.0 / z } else { z };
        let d = fourier_mode_derivative(f, w, n_theta, ladder, seed)?;
        let (scale, s) = if inverted { (w.powi(4), w.norm().powi(4)) } else { (Complex64::new(1.0, 0.0), 1.0) };
        let err = d.estimate.std_err.re.max(d.estimate.std_err.im) * s;
        samples.push(DeltaSample { z, value: d.estimate.mean * scale, std_err: err });
    }
    Ok((charge_fit(&samples)?, samples))
}

/// c(κ) = (6−κ)(3κ−8)/(2κ).
pub fn central_charge_of_kappa(kappa: f64) -> f64 {
    (6.0 - kappa) * (3.0 * kappa - 8.0) / (2.0 * kappa)
}

/// The κ ∈ (8/3, 4] with c(κ) = c; None for c outside (0, 1].
pub fn kappa_from_central_charge(c: f64) -> Option<f64> {
    if !(c > 0.0 && c <= 1.0) {
        return None;
    }
    let a = 13.0 - c;
    Some((a - (a * a - 144.0).max(0.0).sqrt()) / 3.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnePointReport {
    pub w: Complex64,
    /// Δ_w log Z(C|D).
    pub estimate: ComplexEstimate,
    pub derivative: FourierModeDerivative,
}

/// P₁(w)_C through the conformal derivative of log Z(C|D) at a point w ∈ D.
pub fn one_point_via_relative_z(
    w: ComplexPoint,
    c: &DomainSpec,
    d: &DomainSpec,
    table: &NormalizationTable,
    eps_fat: f64,
    settings: &DerivativeSettings,
) -> Result<OnePointReport> {
    let w = finite_point(w)?;
    if !PreparedDomain::new(d)?.contains(ComplexPoint::Finite(w)) {
        return Err(Error::Domain(format!("w = {w} is not in D")));
    }
    if !nested(d, c)? {
        return Err(Error::Domain("closure(D) is not inside C".into()));
    }
    let f = RelativeZFunctional::new(
        c.clone(),
        d.clone(),
        table.proxy_radius,
        eps_fat,
        LatticeSpec::with_resolution(settings.resolution)?,
        settings.mc,
    )?;
    let derivative = fourier_mode_derivative(&f, w, settings.n_theta, &settings.ladder, Some(settings.mc.sampler.seed))?;
    Ok(OnePointReport { w, estimate: derivative.estimate, derivative })
}

/// Charge-fit route: C̃ = 1/(exterior of E(0,1,0)) and D̃ a small disk; the
/// window lies outside 1/D̃.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeRouteSettings {
    /// Radius of D̃ is 1/rho.
    pub rho: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    pub n_phi: usize,
    pub eps_fat: f64,
    pub deriv: DerivativeSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralChargeSettings {
    /// Elongation parameter b̃ of the one-point route.
    pub b_tilde: f64,
    pub stress: StressSettings,
    pub charge: Option<ChargeRouteSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralChargeReport {
    /// c = −Γ(log Z); None when the route was not run or failed.
    pub c_via_charge_fit: Option<Estimate>,
    pub charge_fit: Option<ChargeFit>,
    pub charge_samples: Vec<DeltaSample>,
    /// c = 2 Re P₁(0) on the elongated disk.
    pub c_via_elongated_domain: Option<Estimate>,
    pub elongated: Option<StressInsertion>,
    /// |c₁ − c₂| over the combined error when both routes ran.
    pub pull: Option<f64>,
    pub kappa_implied: Option<f64>,
    pub diagnostics: Vec<String>,
}

/// 1/z applied to the exterior of E(0,1,0): s ↦ 4i·g_b(s) on the unit disk
/// with g_b the elongation map of parameter b.
pub fn inverted_ellipse_exterior(b: f64) -> Result<DomainSpec> {
    let turn = MobiusMap::affine(Complex64::new(0.0, 4.0), Complex64::new(0.0, 0.0))?;
    Ok(DomainSpec::AnalyticImage { map: elongation_map(b)?.then(AnalyticMap::Mobius(turn)) })
}

/// Both central-charge routes. Failures of either route are reported as
/// diagnostics; only invalid settings are errors.
pub fn central_charge(table: &NormalizationTable, s: &CentralChargeSettings) -> Result<CentralChargeReport> {
    s.stress.validate()?;
    let mut diagnostics = Vec::new();
    let domain = DomainSpec::AnalyticImage { map: elongation_map(s.b_tilde)? };
    let (c2, elongated) = match stress_insertion(&EventSpec::Trivial, ComplexPoint::new(0.0, 0.0), &domain, table, &s.stress) {
        Ok(st) => {
            let e = st.estimate();
            (Some(Estimate { mean: 2.0 * e.mean.re, std_err: 2.0 * e.std_err.re, n_samples: e.n_samples, autocorr_corrected: true }), Some(st))
        }
        Err(e) => {
            diagnostics.push(format!("elongated-domain route failed: {e}"));
            (None, None)
        }
    };
    let (mut c1, mut fit, mut samples) = (None, None, Vec::new());
    if let Some(cr) = &s.charge {
        match charge_route(table, cr) {
            Ok((f, smp)) => {
                c1 = Some(Estimate { mean: -f.gamma.mean, ..f.gamma });
                if f.slow_tail {
                    diagnostics.push("charge fit: slow tail in the window".into());
                }
                fit = Some(f);
                samples = smp;
            }
            Err(e) => diagnostics.push(format!("charge-fit route failed: {e}")),
        }
    }
    let pull = match (c1, c2) {
        (Some(a), Some(b)) => Some((a.mean - b.mean).abs() / a.std_err.hypot(b.std_err)),
        _ => None,
    };
    let best = c2.or(c1);
    Ok(CentralChargeReport {
        c_via_charge_fit: c1,
        charge_fit: fit,
        charge_samples: samples,
        c_via_elongated_domain: c2,
        elongated,
        pull,
        kappa_implied: best.and_then(|b| kappa_from_central_charge(b.mean)),
        diagnostics,
    })
}

fn charge_route(table: &NormalizationTable, cr: &ChargeRouteSettings) -> Result<(ChargeFit, Vec<DeltaSample>)> {
    if !(cr.r_min > cr.rho) {
        return Err(Error::Domain(format!("window r_min = {} must exceed rho = {}", cr.r_min, cr.rho)));
    }
    let c = inverted_ellipse_exterior(table.b)?;
    let d = DomainSpec::disk(Complex64::new(0.0, 0.0), 1.0 / cr.rho);
    if !nested(&d, &c)? {
        return Err(Error::Domain("D̃ does not fit inside C̃".into()));
    }
    let f = RelativeZFunctional::new(
        c,
        d,
        table.proxy_radius,
        cr.eps_fat,
        LatticeSpec::with_resolution(cr.deriv.resolution)?,
        cr.deriv.mc,
    )?;
    let window = fit_window(cr.r_min, cr.r_max, cr.n_r, cr.n_phi);
    charge_from_functional(&f, &window, true, cr.deriv.n_theta, &cr.deriv.ladder, Some(cr.deriv.mc.sampler.seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformationReport {
    pub w: Complex64,
    pub gw: Complex64,
    pub derivative: Complex64,
    pub schwarzian: Complex64,
    pub p1: StressInsertion,
    pub p1_image: StressInsertion,
    pub prob: Estimate,
    /// g'(w)² P₁(g(X); g(w))_{g(C)} + (c/12){g,w} P(X)_C − P₁(X; w)_C.
    pub residual: ComplexEstimate,
}

/// Covariance residual of the one-point insertion under a conformal map g.
pub fn transformation_residual(
    g: &AnalyticMap,
    x: &EventSpec,
    w: ComplexPoint,
    c: &DomainSpec,
    central_charge: Estimate,
    table: &NormalizationTable,
    st: &StressSettings,
) -> Result<TransformationReport> {
    let wf = finite_point(w)?;
    let [gw, dg, _, _] = g.taylor(wf)?;
    let s = schwarzian(g, w)?;
    let p1 = stress_insertion(x, w, c, table, st)?;
    let p1_image = stress_insertion(&x.mapped(g)?, ComplexPoint::Finite(gw), &image_domain(c, g)?, table, st)?;
    let prob = if x.is_trivial() {
        Estimate::exact(1.0)
    } else {
        let r = st.rungs.rungs.last().expect("validated ladder");
        estimate_prob(x, c, &r.lattice()?, &st.mc)?
    };
    let a = p1_image.estimate();
    let b = p1.estimate();
    let dg2 = dg * dg;
    let mut mean = dg2 * a.mean - b.mean;
    let mut cov = add_cov(scale_cov(a.cov, dg2), b.cov);
    if s != Complex64::new(0.0, 0.0) {
        let k = s * prob.mean / 12.0;
        mean += k * central_charge.mean;
        let u = s / 12.0;
        let v = (u * central_charge.mean * prob.std_err).norm_sqr() + (u * prob.mean * central_charge.std_err).norm_sqr();
        cov = add_cov(cov, [[v / 2.0, 0.0], [0.0, v / 2.0]]);
    }
    let residual = ComplexEstimate::from_cov(mean, cov, a.n_samples.min(b.n_samples));
    Ok(TransformationReport { w: wf, gw, derivative: dg, schwarzian: s, p1, p1_image, prob, residual })
}
