use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// dz/dt at the samples of a closed curve z(t_k), t_k = 2πk/n, by spectral
/// differentiation.
pub fn spectral_tangent(curve: &[Complex64]) -> Vec<Complex64> {
    let n = curve.len();
    let mut buf = curve.to_vec();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let m = if 2 * k < n {
            k as f64
        } else if 2 * k == n {
            0.0
        } else {
            k as f64 - n as f64
        };
        *c *= Complex64::new(0.0, m / n as f64);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf
}

/// ∮ f(z) dz/(2πi) by the trapezoidal rule over a closed curve sampled at
/// equispaced parameter values; `values[k] = f(curve[k])`.
pub fn contour_integral(values: &[Complex64], curve: &[Complex64]) -> Result<Complex64> {
    if values.len() != curve.len() {
        return Err(Error::Domain(format!("{} values for {} curve points", values.len(), curve.len())));
    }
    if curve.len() < 4 {
        return Err(Error::Domain("contour needs at least 4 points".into()));
    }
    let n = curve.len() as f64;
    let dz = spectral_tangent(curve);
    let s: Complex64 = values.iter().zip(&dz).map(|(f, d)| f * d).sum();
    Ok(s / Complex64::new(0.0, n))
}

/// Same as [`contour_integral`] with f evaluated on the curve.
pub fn contour_integral_fn(f: impl Fn(Complex64) -> Complex64, curve: &[Complex64]) -> Result<Complex64> {
    let v: Vec<Complex64> = curve.iter().map(|&z| f(z)).collect();
    contour_integral(&v, curve)
}

/// n equispaced points on the circle |z − center| = radius, counter-clockwise.
pub fn circle_points(center: Complex64, radius: f64, n: usize) -> Vec<Complex64> {
    (0..n).map(|k| center + Complex64::from_polar(radius, 2.0 * PI * k as f64 / n as f64)).collect()
}

/// Coefficient a_m of f(z) = Σ a_m (z − center)^m on the annulus containing
/// the circle of the given radius.
pub fn laurent_coefficient(
    f: impl Fn(Complex64) -> Complex64,
    center: Complex64,
    radius: f64,
    m: i32,
    n: usize,
) -> Result<Complex64> {
    let pts = circle_points(center, radius, n);
    contour_integral_fn(|z| f(z) * (z - center).powi(-m - 1), &pts)
}
