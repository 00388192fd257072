use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::point::ComplexPoint;
use crate::error::{Error, Result};

/// The ellipse E(w, eps, θ) with shape parameter b > 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseSpec {
    pub w: Complex64,
    pub eps: f64,
    pub theta: f64,
    pub b: f64,
}

impl EllipseSpec {
    pub fn new(w: Complex64, eps: f64, theta: f64, b: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::Domain(format!("ellipse scale {eps} must be positive")));
        }
        if !(b > 1.0) || !b.is_finite() {
            return Err(Error::Domain(format!("ellipse parameter b = {b} must exceed 1")));
        }
        Ok(EllipseSpec { w, eps, theta, b })
    }

    /// Semi-axes (along e^{iθ}, along i·e^{iθ}).
    pub fn semi_axes(&self) -> (f64, f64) {
        (self.eps * (self.b - 1.0 / self.b) / 4.0, self.eps * (self.b + 1.0 / self.b) / 4.0)
    }

    pub fn point(&self, alpha: f64) -> Complex64 {
        let e = Complex64::from_polar(1.0, alpha);
        self.w
            + self.eps
                * Complex64::from_polar(1.0, self.theta)
                * (self.b / 4.0 * e - 1.0 / (4.0 * self.b) * e.conj())
    }

    /// (x/p)² + (y/q)² in the ellipse's own frame; < 1 inside.
    pub fn implicit(&self, z: Complex64) -> f64 {
        let (p, q) = self.semi_axes();
        let u = (z - self.w) * Complex64::from_polar(1.0, -self.theta);
        (u.re / p).powi(2) + (u.im / q).powi(2)
    }

    /// First-order distance estimate to the boundary.
    pub fn boundary_distance(&self, z: Complex64) -> f64 {
        let (p, q) = self.semi_axes();
        let u = (z - self.w) * Complex64::from_polar(1.0, -self.theta);
        let f = (u.re / p).powi(2) + (u.im / q).powi(2) - 1.0;
        let grad = Complex64::new(2.0 * u.re / (p * p), 2.0 * u.im / (q * q)).norm();
        if grad == 0.0 {
            return p.min(q);
        }
        f.abs() / grad
    }
}

/// w + eps·e^{iθ}((b/4)e^{iα} − (1/(4b))e^{−iα}).
pub fn ellipse_boundary(e: &EllipseSpec, alpha: f64) -> ComplexPoint {
    ComplexPoint::Finite(e.point(alpha))
}
