use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

const N_MIN: usize = 4096;
const N_MAX: usize = 1 << 18;

/// Power series of the Riemann map from 𝔻 onto E(0,1,0), normalized by
/// f(0) = 0, f'(0) > 0.
#[derive(Debug, Clone)]
pub struct EllipseSeries {
    pub b: f64,
    pub coeffs: Vec<Complex64>,
    /// Conservative radius of convergence estimate (> 1).
    pub radius: f64,
    /// Max |implicit − 1| on the unit circle.
    pub boundary_residual: f64,
}

fn cache() -> &'static Mutex<HashMap<u64, Arc<EllipseSeries>>> {
    static C: OnceLock<Mutex<HashMap<u64, Arc<EllipseSeries>>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Cached per b.
pub fn unit_ellipse_series(b: f64) -> Result<Arc<EllipseSeries>> {
    if let Some(s) = cache().lock().unwrap().get(&b.to_bits()) {
        return Ok(s.clone());
    }
    let mut n = N_MIN;
    let s = loop {
        let (s, tail) = theodorsen(b, n)?;
        if tail < 1e-15 || n >= N_MAX {
            break Arc::new(s);
        }
        n *= 2;
    };
    cache().lock().unwrap().insert(b.to_bits(), s.clone());
    Ok(s)
}

/// Theodorsen's iteration for the boundary correspondence of a star-shaped
/// region, with FFT conjugation and under-relaxation.
fn theodorsen(b: f64, n: usize) -> Result<(EllipseSeries, f64)> {
    if !(b > 1.0) {
        return Err(Error::Domain(format!("b = {b} must exceed 1")));
    }
    let p = (b - 1.0 / b) / 4.0;
    let q = (b + 1.0 / b) / 4.0;
    let rho = |phi: f64| p * q / ((q * phi.cos()).powi(2) + (p * phi.sin()).powi(2)).sqrt();
    let t: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
    // sup |ρ'/ρ| for an ellipse about its centre.
    let r = (q * q - p * p) / (2.0 * p * q);
    let omega = 1.0 / (1.0 + r * r);

    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut theta = t.clone();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut converged = false;
    let mut best = f64::INFINITY;
    let mut stall = 0;
    for _ in 0..20_000 {
        for j in 0..n {
            buf[j] = Complex64::new(rho(theta[j]).ln(), 0.0);
        }
        fwd.process(&mut buf);
        for (k, c) in buf.iter_mut().enumerate() {
            *c = if k == 0 || 2 * k == n {
                Complex64::new(0.0, 0.0)
            } else if k < n / 2 {
                *c * Complex64::new(0.0, -1.0)
            } else {
                *c * Complex64::new(0.0, 1.0)
            };
        }
        inv.process(&mut buf);
        let mut delta: f64 = 0.0;
        for j in 0..n {
            let target = t[j] + buf[j].re / n as f64;
            let next = (1.0 - omega) * theta[j] + omega * target;
            delta = delta.max((next - theta[j]).abs());
            theta[j] = next;
        }
        if delta < 1e-14 {
            converged = true;
            break;
        }
        // Round-off floor: stop once progress stalls at a tiny step.
        if delta < best {
            best = delta;
            stall = 0;
        } else {
            stall += 1;
            if stall > 50 && best < 1e-12 {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::Domain(format!("boundary correspondence did not converge for b = {b}")));
    }
    for j in 0..n {
        buf[j] = Complex64::from_polar(rho(theta[j]), theta[j]);
    }
    fwd.process(&mut buf);
    let scale = 1.0 / n as f64;
    let a1 = (buf[1] * scale).norm();
    let mut coeffs: Vec<Complex64> = (0..n / 2).map(|k| buf[k] * scale).collect();
    // Odd, real series by symmetry of E(0,1,0).
    for (k, c) in coeffs.iter_mut().enumerate() {
        *c = if k % 2 == 1 { Complex64::new(c.re, 0.0) } else { Complex64::new(0.0, 0.0) };
    }
    let tail = coeffs[3 * n / 8..].iter().map(|c| c.norm()).fold(0.0, f64::max) / a1;
    let cut = coeffs.iter().rposition(|c| c.norm() > 1e-16 * a1).unwrap_or(1);
    coeffs.truncate(cut + 1);
    let last = coeffs[cut].norm().max(1e-300);
    let radius = if cut > 1 { (a1 / last).powf(1.0 / (cut as f64 - 1.0)) } else { f64::INFINITY };
    let radius = radius.clamp(1.0 + 1e-6, 1e6);
    let mut residual: f64 = 0.0;
    for j in 0..1024 {
        let z = Complex64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.37) / 1024.0);
        let v = super::maps::poly_eval(&coeffs, z);
        residual = residual.max(((v.re / p).powi(2) + (v.im / q).powi(2) - 1.0).abs());
    }
    Ok((EllipseSeries { b, coeffs, radius, boundary_residual: residual }, tail))
}
