use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ComplexEstimate, Estimate};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub coef: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub chi2: f64,
    pub dof: usize,
    /// Row k gives coef[k] as a linear functional of the data.
    pub weights: Vec<Vec<f64>>,
}

/// Minimizes Σ ((y_k − Σ_j c_j X_kj)/σ_k)². Zero σ entries get unit weight
/// when every σ is zero and are otherwise floored at the smallest positive σ,
/// itself floored at 1e-8 of the largest. Solved by SVD of the weighted design.
pub fn weighted_least_squares(x: &[Vec<f64>], y: &[f64], sigma: &[f64]) -> Result<FitResult> {
    let n = y.len();
    let m = x.first().map(|r| r.len()).unwrap_or(0);
    if n < m || m == 0 {
        return Err(Error::Estimation(format!("{n} points for {m} parameters")));
    }
    let largest = sigma.iter().cloned().filter(|s| s.is_finite()).fold(0.0, f64::max);
    let floor = sigma.iter().cloned().filter(|s| *s > 0.0).fold(f64::INFINITY, f64::min).max(1e-8 * largest);
    let w: Vec<f64> = sigma
        .iter()
        .map(|&s| {
            let s = if floor.is_finite() { s.max(floor) } else { 1.0 };
            1.0 / (s * s)
        })
        .collect();
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let design = DMatrix::from_fn(n, m, |k, j| sw[k] * x[k][j]);
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    if !(svd.singular_values.min() > 1e-12 * smax) {
        return Err(Error::Estimation("singular fit".into()));
    }
    let pinv = svd.pseudo_inverse(0.0).map_err(|e| Error::Estimation(format!("fit failed: {e}")))?;
    let weights: Vec<Vec<f64>> = (0..m).map(|i| (0..n).map(|k| pinv[(i, k)] * sw[k]).collect()).collect();
    let inv: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| (0..n).map(|k| pinv[(i, k)] * pinv[(j, k)]).sum()).collect()).collect();
    let coef: Vec<f64> = weights.iter().map(|wr| wr.iter().zip(y).map(|(a, b)| a * b).sum()).collect();
    let chi2 = (0..n)
        .map(|k| {
            let r = y[k] - (0..m).map(|j| coef[j] * x[k][j]).sum::<f64>();
            w[k] * r * r
        })
        .sum();
    let cov = if floor.is_finite() { inv } else { vec![vec![0.0; m]; m] };
    Ok(FitResult { coef, cov, chi2, dof: n - m, weights })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsRow {
    pub eps: f64,
    pub value: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationResult {
    pub value: f64,
    pub error: f64,
    pub stat_error: f64,
    /// "power-law", "linear-in-eps" or "single-point".
    pub model: String,
    pub exponent: f64,
    pub chi2: f64,
    pub dof: usize,
    /// Spread of r0 over exponents within Δχ² ≤ 1 of the best fit.
    pub model_spread: f64,
    /// Fitted r1 (coefficient of ε^p).
    pub slope: f64,
    pub table: Vec<EpsRow>,
}

impl ExtrapolationResult {
    pub fn estimate(&self) -> Estimate {
        Estimate { mean: self.value, std_err: self.error, n_samples: self.table.len(), autocorr_corrected: true }
    }

    /// Model curve r0 + r1 ε^p.
    pub fn curve(&self, eps: f64) -> f64 {
        if self.table.len() == 1 {
            self.value
        } else {
            self.value + self.slope * eps.powf(self.exponent)
        }
    }
}

pub const P_GRID: (f64, f64, usize) = (0.5, 2.0, 31);

fn p_grid() -> impl Iterator<Item = f64> {
    let (lo, hi, n) = P_GRID;
    (0..n).map(move |k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
}

fn power_fit(eps: &[f64], y: &[f64], s: &[f64], p: f64) -> Result<FitResult> {
    let x: Vec<Vec<f64>> = eps.iter().map(|e| vec![1.0, e.powf(p)]).collect();
    weighted_least_squares(&x, y, s)
}

fn check_rows(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::Estimation("empty ε ladder".into()));
    }
    if eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Estimation("ε ladder must be positive".into()));
    }
    Ok(())
}

/// Fits r(ε) = r0 + r1 ε^p over p ∈ [0.5, 2], two points use p = 1.
pub fn extrapolate(rows: &[EpsRow]) -> Result<ExtrapolationResult> {
    let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    check_rows(&eps)?;
    let y: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let s: Vec<f64> = rows.iter().map(|r| r.std_err).collect();
    if rows.len() == 1 {
        return Ok(ExtrapolationResult {
            value: y[0],
            error: s[0],
            stat_error: s[0],
            model: "single-point".into(),
            exponent: 0.0,
            chi2: 0.0,
            dof: 0,
            model_spread: 0.0,
            slope: 0.0,
            table: rows.to_vec(),
        });
    }
    if rows.len() == 2 {
        let f = power_fit(&eps, &y, &s, 1.0)?;
        let stat = f.cov[0][0].sqrt();
        return Ok(ExtrapolationResult {
            value: f.coef[0],
            error: stat,
            stat_error: stat,
            model: "linear-in-eps".into(),
            exponent: 1.0,
            chi2: 0.0,
            dof: 0,
            model_spread: 0.0,
            slope: f.coef[1],
            table: rows.to_vec(),
        });
    }
    let fits: Vec<(f64, FitResult)> = p_grid().filter_map(|p| power_fit(&eps, &y, &s, p).ok().map(|f| (p, f))).collect();
    let (p, best) = fits
        .iter()
        .min_by(|a, b| a.1.chi2.total_cmp(&b.1.chi2))
        .ok_or_else(|| Error::Estimation("no admissible extrapolation exponent".into()))?;
    let scale = if best.dof > 0 { (best.chi2 / best.dof as f64).max(1.0) } else { 1.0 };
    let stat = (best.cov[0][0] * scale).sqrt();
    let tol = best.chi2 + scale;
    let spread = fits.iter().filter(|f| f.1.chi2 <= tol).map(|f| (f.1.coef[0] - best.coef[0]).abs()).fold(0.0, f64::max);
    Ok(ExtrapolationResult {
        value: best.coef[0],
        error: stat.hypot(spread),
        stat_error: stat,
        model: "power-law".into(),
        exponent: *p,
        chi2: best.chi2,
        dof: best.dof,
        model_spread: spread,
        slope: best.coef[1],
        table: rows.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexEpsRow {
    pub eps: f64,
    pub estimate: ComplexEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexExtrapolation {
    pub value: Complex64,
    pub error: Complex64,
    pub cov: [[f64; 2]; 2],
    pub model: String,
    pub exponent: f64,
    pub chi2: f64,
    pub dof: usize,
    pub model_spread: Complex64,
    pub slope: Complex64,
    pub table: Vec<ComplexEpsRow>,
}

impl ComplexExtrapolation {
    pub fn estimate(&self) -> ComplexEstimate {
        let mut e = ComplexEstimate::from_cov(self.value, self.cov, self.table.len());
        e.std_err = self.error;
        e
    }
}

/// Real and imaginary parts fitted with a shared exponent; the covariance of
/// the intercept is propagated through the linear fit weights.
pub fn extrapolate_complex(rows: &[ComplexEpsRow]) -> Result<ComplexExtrapolation> {
    let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    check_rows(&eps)?;
    let yr: Vec<f64> = rows.iter().map(|r| r.estimate.mean.re).collect();
    let yi: Vec<f64> = rows.iter().map(|r| r.estimate.mean.im).collect();
    let sr: Vec<f64> = rows.iter().map(|r| r.estimate.std_err.re).collect();
    let si: Vec<f64> = rows.iter().map(|r| r.estimate.std_err.im).collect();
    if rows.len() == 1 {
        let e = rows[0].estimate;
        return Ok(ComplexExtrapolation {
            value: e.mean,
            error: e.std_err,
            cov: e.cov,
            model: "single-point".into(),
            exponent: 0.0,
            chi2: 0.0,
            dof: 0,
            model_spread: Complex64::default(),
            slope: Complex64::default(),
            table: rows.to_vec(),
        });
    }
    let grid: Vec<f64> = if rows.len() == 2 { vec![1.0] } else { p_grid().collect() };
    let mut fits = Vec::new();
    for p in grid {
        if let (Ok(fr), Ok(fi)) = (power_fit(&eps, &yr, &sr, p), power_fit(&eps, &yi, &si, p)) {
            fits.push((p, fr, fi));
        }
    }
    let best = fits
        .iter()
        .min_by(|a, b| (a.1.chi2 + a.2.chi2).total_cmp(&(b.1.chi2 + b.2.chi2)))
        .ok_or_else(|| Error::Estimation("no admissible extrapolation exponent".into()))?;
    let (p, fr, fi) = best;
    let dof = fr.dof + fi.dof;
    let chi2 = fr.chi2 + fi.chi2;
    let scale = if dof > 0 { (chi2 / dof as f64).max(1.0) } else { 1.0 };
    let (wr, wi) = (&fr.weights[0], &fi.weights[0]);
    let mut cov = [[0.0; 2]; 2];
    for (k, r) in rows.iter().enumerate() {
        let c = r.estimate.cov;
        cov[0][0] += wr[k] * wr[k] * c[0][0];
        cov[0][1] += wr[k] * wi[k] * c[0][1];
        cov[1][1] += wi[k] * wi[k] * c[1][1];
    }
    for row in cov.iter_mut() {
        for v in row.iter_mut() {
            *v *= scale;
        }
    }
    cov[1][0] = cov[0][1];
    let tol = chi2 + scale;
    let mut spread = Complex64::default();
    for (_, a, b) in fits.iter().filter(|f| f.1.chi2 + f.2.chi2 <= tol) {
        spread.re = spread.re.max((a.coef[0] - fr.coef[0]).abs());
        spread.im = spread.im.max((b.coef[0] - fi.coef[0]).abs());
    }
    let error = Complex64::new(cov[0][0].sqrt().hypot(spread.re), cov[1][1].sqrt().hypot(spread.im));
    Ok(ComplexExtrapolation {
        value: Complex64::new(fr.coef[0], fi.coef[0]),
        error,
        cov,
        model: if rows.len() == 2 { "linear-in-eps".into() } else { "power-law".into() },
        exponent: *p,
        chi2,
        dof,
        model_spread: spread,
        slope: Complex64::new(fr.coef[1], fi.coef[1]),
        table: rows.to_vec(),
    })
}
