use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A point on the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ComplexPoint {
    Finite(Complex64),
    Infinity,
}

impl ComplexPoint {
    pub fn new(re: f64, im: f64) -> Self {
        ComplexPoint::Finite(Complex64::new(re, im))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ComplexPoint::Infinity)
    }

    pub fn finite(&self) -> Option<Complex64> {
        match self {
            ComplexPoint::Finite(z) => Some(*z),
            ComplexPoint::Infinity => None,
        }
    }

    /// Finite points with non-finite coordinates are rejected.
    pub fn is_valid(&self) -> bool {
        match self {
            ComplexPoint::Finite(z) => z.re.is_finite() && z.im.is_finite(),
            ComplexPoint::Infinity => true,
        }
    }

    /// Chordal distance on the unit sphere; finite for every pair.
    pub fn chordal_distance(&self, other: &ComplexPoint) -> f64 {
        match (self, other) {
            (ComplexPoint::Infinity, ComplexPoint::Infinity) => 0.0,
            (ComplexPoint::Finite(a), ComplexPoint::Infinity)
            | (ComplexPoint::Infinity, ComplexPoint::Finite(a)) => 2.0 / (1.0 + a.norm_sqr()).sqrt(),
            (ComplexPoint::Finite(a), ComplexPoint::Finite(b)) => {
                2.0 * (a - b).norm() / ((1.0 + a.norm_sqr()).sqrt() * (1.0 + b.norm_sqr()).sqrt())
            }
        }
    }
}

impl From<Complex64> for ComplexPoint {
    fn from(z: Complex64) -> Self {
        ComplexPoint::Finite(z)
    }
}
