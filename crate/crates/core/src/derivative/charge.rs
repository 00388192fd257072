use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{weighted_least_squares, Estimate};

/// One measured global derivative Δ_z with a per-component standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaSample {
    pub z: Complex64,
    pub value: Complex64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeFit {
    /// Γ with its fit error.
    pub gamma: Estimate,
    /// Coefficient of the z⁻⁵ nuisance term.
    pub beta: Complex64,
    pub chi2: f64,
    pub dof: usize,
    pub r_min: f64,
    pub r_max: f64,
    /// Coefficient of a z⁻³ term fitted alongside, with its error.
    pub tail_coeff: Complex64,
    pub tail_err: f64,
    /// A z⁻³ (or slower) component is significant: the bounded-partition
    /// expansion does not hold in this window.
    pub slow_tail: bool,
}

/// Minimum ratio r_max/r_min of the fit window.
pub const MIN_DECADES: f64 = 10.0;

/// Log-spaced radii times equispaced angles.
pub fn fit_window(r_min: f64, r_max: f64, n_r: usize, n_phi: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n_r * n_phi);
    for i in 0..n_r {
        let t = if n_r > 1 { i as f64 / (n_r - 1) as f64 } else { 0.0 };
        let r = r_min * (r_max / r_min).powf(t);
        for j in 0..n_phi {
            let phi = 2.0 * PI * (j as f64 + 0.5 * (i % 2) as f64) / n_phi as f64;
            out.push(Complex64::from_polar(r, phi));
        }
    }
    out
}

/// Rows of y = Δ·z⁴ in terms of real parameters; `extra` adds a·z.
fn design(samples: &[DeltaSample], extra: bool) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let (mut x, mut y, mut s) = (Vec::new(), Vec::new(), Vec::new());
    for d in samples {
        let z4 = d.z.powi(4);
        let v = d.value * z4;
        let u = 1.0 / d.z;
        let sig = d.std_err * z4.norm();
        let mut re = vec![1.0, u.re, -u.im];
        let mut im = vec![0.0, u.im, u.re];
        if extra {
            re.extend([d.z.re, -d.z.im]);
            im.extend([d.z.im, d.z.re]);
        }
        x.push(re);
        y.push(v.re);
        s.push(sig);
        x.push(im);
        y.push(v.im);
        s.push(sig);
    }
    (x, y, s)
}

/// Weighted fit of Δ_z = (Γ/32)z⁻⁴ + βz⁻⁵ with Γ real.
pub fn charge_fit(samples: &[DeltaSample]) -> Result<ChargeFit> {
    if samples.len() < 3 {
        return Err(Error::Estimation("charge fit needs at least 3 samples".into()));
    }
    let r_min = samples.iter().map(|d| d.z.norm()).fold(f64::INFINITY, f64::min);
    let r_max = samples.iter().map(|d| d.z.norm()).fold(0.0, f64::max);
    if !(r_max >= MIN_DECADES * r_min * (1.0 - 1e-12)) {
        return Err(Error::Estimation(format!("fit window {r_min}..{r_max} spans less than a decade")));
    }
    let (x, y, s) = design(samples, false);
    let f = weighted_least_squares(&x, &y, &s)?;
    let scale = if f.dof > 0 { (f.chi2 / f.dof as f64).max(1.0) } else { 1.0 };
    let g = f.coef[0];
    let g_err = (f.cov[0][0] * scale).sqrt();

    let (xe, ye, se) = design(samples, true);
    let (tail_coeff, tail_err) = match weighted_least_squares(&xe, &ye, &se) {
        Ok(fe) => {
            let sc = if fe.dof > 0 { (fe.chi2 / fe.dof as f64).max(1.0) } else { 1.0 };
            let a = Complex64::new(fe.coef[3], fe.coef[4]);
            let err = ((fe.cov[3][3] + fe.cov[4][4]) * sc).sqrt();
            (a, err)
        }
        Err(_) => (Complex64::default(), f64::INFINITY),
    };
    let slow_tail = tail_coeff.norm() > 3.0 * tail_err && tail_coeff.norm() * r_min > 0.05 * g.abs();
    Ok(ChargeFit {
        gamma: Estimate { mean: 32.0 * g, std_err: 32.0 * g_err, n_samples: samples.len(), autocorr_corrected: false },
        beta: Complex64::new(f.coef[1], f.coef[2]),
        chi2: f.chi2,
        dof: f.dof,
        r_min,
        r_max,
        tail_coeff,
        tail_err,
        slow_tail,
    })
}

impl ChargeFit {
    /// The fitted Δ_z.
    pub fn model(&self, z: Complex64) -> Complex64 {
        (self.gamma.mean / 32.0 + self.beta / z) / z.powi(4)
    }
}
