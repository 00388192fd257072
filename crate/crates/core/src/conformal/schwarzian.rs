use num_complex::Complex64;

use super::maps::AnalyticMap;
use super::mobius::MobiusMap;
use super::point::ComplexPoint;
use crate::error::{Error, Result};

/// Sign of the pole-branch formula. Exposed only so that the self-test can
/// demonstrate that a flipped sign is detected.
#[doc(hidden)]
pub const POLE_BRANCH_SIGN: f64 = 1.0;

/// g'''/g' − (3/2)(g''/g')² from a jet.
fn finite_branch(d1: Complex64, d2: Complex64, d3: Complex64) -> Result<Complex64> {
    if d1.norm() == 0.0 {
        return Err(Error::Domain("g'(w) = 0".into()));
    }
    let r = d2 / d1;
    Ok(d3 / d1 - 1.5 * r * r)
}

/// Schwarzian derivative {g, w}.
///
/// When g(w) = ∞ the value is read off the Laurent data of g at its pole:
/// with g = A/(z−w) + B + C(z−w) + …, {g,w} = −6C/A, obtained from the jet
/// of 1/g.
pub fn schwarzian(g: &AnalyticMap, w: ComplexPoint) -> Result<Complex64> {
    schwarzian_with_sign(g, w, POLE_BRANCH_SIGN)
}

#[doc(hidden)]
pub fn schwarzian_with_sign(g: &AnalyticMap, w: ComplexPoint, sign: f64) -> Result<Complex64> {
    let w = w.finite().ok_or_else(|| Error::Domain("w = ∞".into()))?;
    match g.taylor(w) {
        Ok(t) => finite_branch(t[1], 2.0 * t[2], 6.0 * t[3]),
        Err(Error::Pole(_)) => {
            let r = g
                .reciprocal()
                .ok_or_else(|| Error::NotImplemented("reciprocal of this map".into()))?;
            let t = r.taylor(w)?;
            if t[0].norm() > 1e-9 * (1.0 + t[1].norm()) {
                return Err(Error::Domain("reciprocal does not vanish at the pole".into()));
            }
            if t[1].norm() == 0.0 {
                return Err(Error::Domain("pole of order > 1".into()));
            }
            // 1/g = h1 u + h2 u² + h3 u³ with u = z − w.
            let (h1, h2, h3) = (t[1], t[2], t[3]);
            let a = 1.0 / h1;
            let b = -h2 * a * a;
            let c = (b * b / (a * a * a) - h3) * a * a;
            Ok(sign * (-6.0) * c / a)
        }
        Err(e) => Err(e),
    }
}

/// The global map G with (G∘g)(z) = z + (a/6)(z−w)³ + O((z−w)⁴), and a = {g, w}.
pub fn normal_form(g: &AnalyticMap, w: ComplexPoint) -> Result<(MobiusMap, Complex64)> {
    let wf = w.finite().ok_or_else(|| Error::Domain("w = ∞".into()))?;
    let a = schwarzian(g, w)?;
    let (t, pre) = match g.taylor(wf) {
        Ok(t) => (t, MobiusMap::identity()),
        Err(Error::Pole(_)) => {
            let r = g
                .reciprocal()
                .ok_or_else(|| Error::NotImplemented("reciprocal of this map".into()))?;
            (r.taylor(wf)?, MobiusMap::inversion())
        }
        Err(e) => return Err(e),
    };
    if t[1].norm() == 0.0 {
        return Err(Error::Domain("g'(w) = 0".into()));
    }
    let one = Complex64::new(1.0, 0.0);
    // G1⁻¹ removes constant and linear parts.
    let g1_inv = MobiusMap::new(one, wf * t[1] - t[0], Complex64::new(0.0, 0.0), t[1])?;
    // G2 with η = h2 removes the quadratic part.
    let eta = t[2] / t[1];
    let g2 = MobiusMap::new(one + eta * wf, -eta * wf * wf, eta, one - eta * wf)?;
    Ok((g2.compose(&g1_inv).compose(&pre), a))
}
