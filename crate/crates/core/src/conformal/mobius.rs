use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::point::ComplexPoint;
use crate::error::{Error, Result};

/// z ↦ (az+b)/(cz+d), stored with ad − bc = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusMap {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl MobiusMap {
    /// Normalizes the coefficients so that the determinant is 1.
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let det = a * d - b * c;
        let scale = a.norm().max(b.norm()).max(c.norm()).max(d.norm());
        if !(det.norm() > 1e-300) || det.norm() <= 1e-28 * scale * scale {
            return Err(Error::Domain("degenerate Möbius coefficients".into()));
        }
        let s = det.sqrt();
        Ok(MobiusMap { a: a / s, b: b / s, c: c / s, d: d / s })
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        MobiusMap { a: one, b: zero, c: zero, d: one }
    }

    /// z ↦ 1/z.
    pub fn inversion() -> Self {
        let zero = Complex64::new(0.0, 0.0);
        MobiusMap { a: zero, b: Complex64::new(0.0, 1.0), c: Complex64::new(0.0, 1.0), d: zero }
    }

    /// z ↦ scale·z + shift.
    pub fn affine(scale: Complex64, shift: Complex64) -> Result<Self> {
        Self::new(scale, shift, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))
    }

    /// Disk automorphism (az + conj b)/(bz + conj a), |a|² − |b|² = 1 after scaling.
    pub fn disk_automorphism(a: Complex64, b: Complex64) -> Result<Self> {
        Self::new(a, b.conj(), b, a.conj())
    }

    pub fn determinant(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn apply(&self, z: ComplexPoint) -> ComplexPoint {
        match z {
            ComplexPoint::Infinity => {
                if self.c == Complex64::new(0.0, 0.0) {
                    ComplexPoint::Infinity
                } else {
                    ComplexPoint::Finite(self.a / self.c)
                }
            }
            ComplexPoint::Finite(z) => {
                let den = self.c * z + self.d;
                if den == Complex64::new(0.0, 0.0) {
                    ComplexPoint::Infinity
                } else {
                    ComplexPoint::Finite((self.a * z + self.b) / den)
                }
            }
        }
    }

    /// Finite evaluation; a pole is an error.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        match self.apply(ComplexPoint::Finite(z)) {
            ComplexPoint::Finite(v) => Ok(v),
            ComplexPoint::Infinity => Err(Error::Pole(format!("{z}"))),
        }
    }

    /// self ∘ other.
    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        let (e, f, g, h) = (other.a, other.b, other.c, other.d);
        MobiusMap { a: a * e + b * g, b: a * f + b * h, c: c * e + d * g, d: c * f + d * h }
    }

    pub fn inverse(&self) -> MobiusMap {
        MobiusMap { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// Pole of the map (the preimage of ∞).
    pub fn pole(&self) -> ComplexPoint {
        if self.c == Complex64::new(0.0, 0.0) {
            ComplexPoint::Infinity
        } else {
            ComplexPoint::Finite(-self.d / self.c)
        }
    }

    /// Derivatives of orders 1..3 at a finite non-pole point.
    pub fn derivatives(&self, z: Complex64) -> Result<[Complex64; 3]> {
        let den = self.c * z + self.d;
        if den == Complex64::new(0.0, 0.0) {
            return Err(Error::Pole(format!("{z}")));
        }
        let det = self.determinant();
        let d1 = det / (den * den);
        let d2 = -2.0 * self.c * d1 / den;
        let d3 = -3.0 * self.c * d2 / den;
        Ok([d1, d2, d3])
    }

    /// True if the map is a similarity z ↦ αz + β.
    pub fn is_affine(&self) -> bool {
        self.c.norm() <= 1e-15 * self.d.norm()
    }
}

/// The generalised scale transformation fixing z and z′.
///
/// λ_{z′,z}(x) = ((1−λ)zz′ − (z′−λz)x) / (z − λz′ − (1−λ)x), with the
/// coefficient limits taken when either fixed point is ∞.
pub fn gen_scale_map(zp: ComplexPoint, z: ComplexPoint, lambda: f64) -> Result<MobiusMap> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Domain(format!("lambda = {lambda} outside (0, 1]")));
    }
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let l = Complex64::new(lambda, 0.0);
    match (zp, z) {
        (ComplexPoint::Infinity, ComplexPoint::Infinity) => {
            Err(Error::Domain("fixed points coincide".into()))
        }
        (ComplexPoint::Infinity, ComplexPoint::Finite(z)) => {
            MobiusMap::new(one, -(one - l) * z, zero, l)
        }
        (ComplexPoint::Finite(zp), ComplexPoint::Infinity) => MobiusMap::new(l, (one - l) * zp, zero, one),
        (ComplexPoint::Finite(zp), ComplexPoint::Finite(z)) => {
            if (zp - z).norm() <= 1e-14 * (1.0 + zp.norm()) {
                return Err(Error::Domain("fixed points coincide".into()));
            }
            MobiusMap::new(-(zp - l * z), (one - l) * z * zp, -(one - l), z - l * zp)
        }
    }
}
