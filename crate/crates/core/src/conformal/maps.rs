use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::mobius::MobiusMap;
use super::point::ComplexPoint;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Value and first three derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
    pub d3: Complex64,
}

impl Jet {
    fn from_taylor(t: [Complex64; 4]) -> Jet {
        Jet { value: t[0], d1: t[1], d2: 2.0 * t[2], d3: 6.0 * t[3] }
    }

    pub fn taylor(&self) -> [Complex64; 4] {
        [self.value, self.d1, self.d2 / 2.0, self.d3 / 6.0]
    }
}

/// Taylor coefficients (p, p', p''/2, p'''/6) of a polynomial at x.
pub(crate) fn poly_taylor(coeffs: &[Complex64], x: Complex64) -> [Complex64; 4] {
    let mut b = [ZERO; 4];
    for &c in coeffs.iter().rev() {
        b[3] = b[3] * x + b[2];
        b[2] = b[2] * x + b[1];
        b[1] = b[1] * x + b[0];
        b[0] = b[0] * x + c;
    }
    b
}

pub(crate) fn poly_eval(coeffs: &[Complex64], x: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(ZERO, |acc, &c| acc * x + c)
}

fn taylor_div(a: [Complex64; 4], b: [Complex64; 4]) -> [Complex64; 4] {
    let q0 = a[0] / b[0];
    let q1 = (a[1] - q0 * b[1]) / b[0];
    let q2 = (a[2] - q0 * b[2] - q1 * b[1]) / b[0];
    let q3 = (a[3] - q0 * b[3] - q1 * b[2] - q2 * b[1]) / b[0];
    [q0, q1, q2, q3]
}

/// Taylor coefficients of f∘g from those of f (at g(z)) and of g (at z).
fn taylor_compose(f: [Complex64; 4], g: [Complex64; 4]) -> [Complex64; 4] {
    [
        f[0],
        f[1] * g[1],
        f[1] * g[2] + f[2] * g[1] * g[1],
        f[1] * g[3] + 2.0 * f[2] * g[1] * g[2] + f[3] * g[1] * g[1] * g[1],
    ]
}

fn poly_trim(mut p: Vec<Complex64>) -> Vec<Complex64> {
    while p.len() > 1 && *p.last().unwrap() == ZERO {
        p.pop();
    }
    if p.is_empty() {
        p.push(ZERO);
    }
    p
}

fn poly_add(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len().max(b.len());
    let v = (0..n)
        .map(|i| a.get(i).copied().unwrap_or(ZERO) + b.get(i).copied().unwrap_or(ZERO))
        .collect();
    poly_trim(v)
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut v = vec![ZERO; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            v[i + j] += x * y;
        }
    }
    poly_trim(v)
}

/// A rational function num/den with ascending coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rational {
    pub num: Vec<Complex64>,
    pub den: Vec<Complex64>,
}

impl Rational {
    pub fn new(num: Vec<Complex64>, den: Vec<Complex64>) -> Self {
        Rational { num: poly_trim(num), den: poly_trim(den) }
    }

    pub fn add(&self, other: &Rational) -> Rational {
        if self.den == other.den {
            return Rational::new(poly_add(&self.num, &other.num), self.den.clone());
        }
        Rational::new(
            poly_add(&poly_mul(&self.num, &other.den), &poly_mul(&other.num, &self.den)),
            poly_mul(&self.den, &other.den),
        )
    }

    pub fn scale(&self, k: Complex64) -> Rational {
        Rational::new(self.num.iter().map(|c| c * k).collect(), self.den.clone())
    }

    pub fn reciprocal(&self) -> Rational {
        Rational::new(self.den.clone(), self.num.clone())
    }

    fn taylor(&self, z: Complex64) -> Result<[Complex64; 4]> {
        let d = poly_taylor(&self.den, z);
        if d[0] == ZERO {
            return Err(Error::Pole(format!("{z}")));
        }
        Ok(taylor_div(poly_taylor(&self.num, z), d))
    }

    fn at_infinity(&self) -> ComplexPoint {
        let (n, d) = (self.num.len(), self.den.len());
        if n > d {
            ComplexPoint::Infinity
        } else if n == d {
            ComplexPoint::Finite(self.num[n - 1] / self.den[d - 1])
        } else {
            ComplexPoint::Finite(ZERO)
        }
    }
}

/// Analytic vector fields used as infinitesimal deformation directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DirectionField {
    /// e^{iθ}/(w − z).
    Pole { w: Complex64, theta: f64 },
    /// coeff·z^m.
    Monomial { coeff: Complex64, m: u32 },
    /// factor·h.
    Scaled { factor: Complex64, field: Box<DirectionField> },
    /// z ↦ conj(h(conj z)).
    Reflected(Box<DirectionField>),
    Sum(Vec<DirectionField>),
}

impl DirectionField {
    pub fn pole(w: Complex64, theta: f64) -> Self {
        DirectionField::Pole { w, theta }
    }

    pub fn monomial(m: u32) -> Self {
        DirectionField::Monomial { coeff: ONE, m }
    }

    pub fn scaled(self, factor: Complex64) -> Self {
        DirectionField::Scaled { factor, field: Box::new(self) }
    }

    /// h + h*, the real-symmetric extension used on the upper half-plane.
    pub fn symmetrized(self) -> Self {
        DirectionField::Sum(vec![self.clone(), DirectionField::Reflected(Box::new(self))])
    }

    pub fn taylor(&self, z: Complex64) -> Result<[Complex64; 4]> {
        match self {
            DirectionField::Pole { w, theta } => {
                let u = *w - z;
                if u == ZERO {
                    return Err(Error::Pole(format!("{z}")));
                }
                let e = Complex64::from_polar(1.0, *theta);
                let r = 1.0 / u;
                Ok([e * r, e * r * r, e * r * r * r, e * r * r * r * r])
            }
            DirectionField::Monomial { coeff, m } => {
                let mut p = vec![ZERO; *m as usize + 1];
                p[*m as usize] = *coeff;
                Ok(poly_taylor(&p, z))
            }
            DirectionField::Scaled { factor, field } => Ok(field.taylor(z)?.map(|c| c * factor)),
            DirectionField::Reflected(field) => Ok(field.taylor(z.conj())?.map(|c| c.conj())),
            DirectionField::Sum(fields) => {
                let mut acc = [ZERO; 4];
                for f in fields {
                    let t = f.taylor(z)?;
                    for k in 0..4 {
                        acc[k] += t[k];
                    }
                }
                Ok(acc)
            }
        }
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.taylor(z)?[0])
    }

    pub fn to_rational(&self) -> Rational {
        match self {
            DirectionField::Pole { w, theta } => {
                Rational::new(vec![Complex64::from_polar(1.0, *theta)], vec![*w, -ONE])
            }
            DirectionField::Monomial { coeff, m } => {
                let mut p = vec![ZERO; *m as usize + 1];
                p[*m as usize] = *coeff;
                Rational::new(p, vec![ONE])
            }
            DirectionField::Scaled { factor, field } => field.to_rational().scale(*factor),
            DirectionField::Reflected(field) => {
                let r = field.to_rational();
                Rational::new(
                    r.num.iter().map(|c| c.conj()).collect(),
                    r.den.iter().map(|c| c.conj()).collect(),
                )
            }
            DirectionField::Sum(fields) => fields
                .iter()
                .map(|f| f.to_rational())
                .reduce(|a, b| a.add(&b))
                .unwrap_or_else(|| Rational::new(vec![ZERO], vec![ONE])),
        }
    }

    /// Finite poles of the field.
    pub fn poles(&self) -> Vec<Complex64> {
        match self {
            DirectionField::Pole { w, .. } => vec![*w],
            DirectionField::Monomial { .. } => vec![],
            DirectionField::Scaled { field, .. } => field.poles(),
            DirectionField::Reflected(field) => field.poles().into_iter().map(|p| p.conj()).collect(),
            DirectionField::Sum(fields) => fields.iter().flat_map(|f| f.poles()).collect(),
        }
    }
}

/// A conformal map that can be evaluated together with three derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AnalyticMap {
    Identity,
    Mobius(MobiusMap),
    Rational(Rational),
    /// Σ c_k (z − center)^k, conformal for |z − center| < radius.
    Series { center: Complex64, coeffs: Vec<Complex64>, radius: f64 },
    /// z ↦ exp(scale·z).
    Exp { scale: Complex64 },
    /// z ↦ z + η·h(z).
    Perturbation { eta: Complex64, field: DirectionField },
    /// Applied left to right: maps[0] first.
    Compose(Vec<AnalyticMap>),
}

impl AnalyticMap {
    pub fn polynomial(coeffs: Vec<Complex64>) -> Self {
        AnalyticMap::Series { center: ZERO, coeffs, radius: f64::INFINITY }
    }

    pub fn perturbation(eta: Complex64, field: DirectionField) -> Self {
        AnalyticMap::Perturbation { eta, field }
    }

    /// `self` followed by `outer`.
    pub fn then(self, outer: AnalyticMap) -> Self {
        let mut maps = match self {
            AnalyticMap::Compose(m) => m,
            m => vec![m],
        };
        match outer {
            AnalyticMap::Compose(m) => maps.extend(m),
            m => maps.push(m),
        }
        AnalyticMap::Compose(maps)
    }

    /// Taylor coefficients (g, g', g''/2, g'''/6) at a finite point.
    pub fn taylor(&self, z: Complex64) -> Result<[Complex64; 4]> {
        match self {
            AnalyticMap::Identity => Ok([z, ONE, ZERO, ZERO]),
            AnalyticMap::Mobius(m) => {
                let v = m.eval(z)?;
                let [d1, d2, d3] = m.derivatives(z)?;
                Ok([v, d1, d2 / 2.0, d3 / 6.0])
            }
            AnalyticMap::Rational(r) => r.taylor(z),
            AnalyticMap::Series { center, coeffs, radius } => {
                let x = z - center;
                if x.norm() >= *radius {
                    return Err(Error::Domain(format!("{z} outside series disk")));
                }
                Ok(poly_taylor(coeffs, x))
            }
            AnalyticMap::Exp { scale } => {
                let e = (scale * z).exp();
                Ok([e, scale * e, scale * scale * e / 2.0, scale * scale * scale * e / 6.0])
            }
            AnalyticMap::Perturbation { eta, field } => {
                let h = field.taylor(z)?;
                Ok([z + eta * h[0], ONE + eta * h[1], eta * h[2], eta * h[3]])
            }
            AnalyticMap::Compose(maps) => {
                let mut t = [z, ONE, ZERO, ZERO];
                for m in maps {
                    let f = m.taylor(t[0])?;
                    t = taylor_compose(f, t);
                }
                Ok(t)
            }
        }
    }

    pub fn jet(&self, z: Complex64) -> Result<Jet> {
        Ok(Jet::from_taylor(self.taylor(z)?))
    }

    /// Finite evaluation; poles and out-of-domain points are errors.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        match self {
            AnalyticMap::Identity => Ok(z),
            AnalyticMap::Mobius(m) => m.eval(z),
            AnalyticMap::Rational(r) => {
                let d = poly_eval(&r.den, z);
                if d == ZERO {
                    return Err(Error::Pole(format!("{z}")));
                }
                Ok(poly_eval(&r.num, z) / d)
            }
            AnalyticMap::Series { center, coeffs, radius } => {
                let x = z - center;
                if x.norm() >= *radius {
                    return Err(Error::Domain(format!("{z} outside series disk")));
                }
                Ok(poly_eval(coeffs, x))
            }
            AnalyticMap::Exp { scale } => Ok((scale * z).exp()),
            AnalyticMap::Perturbation { eta, field } => Ok(z + eta * field.eval(z)?),
            AnalyticMap::Compose(maps) => maps.iter().try_fold(z, |acc, m| m.eval(acc)),
        }
    }

    /// Evaluation on the Riemann sphere.
    pub fn apply(&self, z: ComplexPoint) -> Result<ComplexPoint> {
        match (self, z) {
            (AnalyticMap::Mobius(m), _) => Ok(m.apply(z)),
            (AnalyticMap::Identity, _) => Ok(z),
            (AnalyticMap::Compose(maps), _) => maps.iter().try_fold(z, |acc, m| m.apply(acc)),
            (_, ComplexPoint::Finite(x)) => match self.eval(x) {
                Ok(v) => Ok(ComplexPoint::Finite(v)),
                Err(Error::Pole(_)) => Ok(ComplexPoint::Infinity),
                Err(e) => Err(e),
            },
            (AnalyticMap::Rational(r), ComplexPoint::Infinity) => Ok(r.at_infinity()),
            (AnalyticMap::Perturbation { .. }, ComplexPoint::Infinity) => {
                Ok(self.to_rational().map(|r| r.at_infinity()).unwrap_or(ComplexPoint::Infinity))
            }
            (AnalyticMap::Series { coeffs, radius, .. }, ComplexPoint::Infinity) => {
                if radius.is_infinite() && coeffs.len() > 1 {
                    Ok(ComplexPoint::Infinity)
                } else {
                    Err(Error::Domain("series map at infinity".into()))
                }
            }
            (AnalyticMap::Exp { .. }, ComplexPoint::Infinity) => {
                Err(Error::Domain("exponential at infinity".into()))
            }
        }
    }

    /// Rational form when one exists.
    pub fn to_rational(&self) -> Option<Rational> {
        match self {
            AnalyticMap::Identity => Some(Rational::new(vec![ZERO, ONE], vec![ONE])),
            AnalyticMap::Mobius(m) => Some(Rational::new(vec![m.b, m.a], vec![m.d, m.c])),
            AnalyticMap::Rational(r) => Some(r.clone()),
            AnalyticMap::Series { coeffs, radius, center } if radius.is_infinite() && *center == ZERO => {
                Some(Rational::new(coeffs.clone(), vec![ONE]))
            }
            AnalyticMap::Perturbation { eta, field } => {
                let h = field.to_rational();
                let id_part = poly_mul(&[ZERO, ONE], &h.den);
                let num = poly_add(&id_part, &h.num.iter().map(|c| c * eta).collect::<Vec<_>>());
                Some(Rational::new(num, h.den))
            }
            _ => None,
        }
    }

    /// The map 1/g, simplified so that a pole of g becomes a regular zero.
    pub fn reciprocal(&self) -> Option<AnalyticMap> {
        match self {
            AnalyticMap::Mobius(m) => Some(AnalyticMap::Mobius(MobiusMap::inversion().compose(m))),
            AnalyticMap::Compose(maps) if !maps.is_empty() => {
                let mut inner = maps.clone();
                let last = inner.pop().unwrap();
                let r = last.reciprocal()?;
                inner.push(r);
                Some(AnalyticMap::Compose(inner))
            }
            _ => self.to_rational().map(|r| AnalyticMap::Rational(r.reciprocal())),
        }
    }

    /// Nonzero finite derivative at z, and z inside the map's natural domain.
    pub fn is_conformal_at(&self, z: Complex64) -> bool {
        match self.taylor(z) {
            Ok(t) => t[1] != ZERO && t.iter().all(|c| c.re.is_finite() && c.im.is_finite()),
            Err(_) => false,
        }
    }
}

/// g_{w,ε,θ}(z) = z + ε²e^{2iθ}/(16(w − z)).
pub fn pinch_map(w: Complex64, eps: f64, theta: f64) -> Result<AnalyticMap> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps = {eps} must be positive")));
    }
    let k = Complex64::from_polar(eps * eps / 16.0, 2.0 * theta);
    Ok(AnalyticMap::Rational(Rational::new(vec![k, w, -ONE], vec![w, -ONE])))
}

/// z ↦ z/(b̃ + z²/b̃), the elongation map of the unit disk.
pub fn elongation_map(bt: f64) -> Result<AnalyticMap> {
    if !(bt > 1.0) {
        return Err(Error::Domain(format!("elongation parameter {bt} must exceed 1")));
    }
    let b = Complex64::new(bt, 0.0);
    Ok(AnalyticMap::Rational(Rational::new(vec![ZERO, b], vec![b * b, ZERO, ONE])))
}

/// z ↦ z − k/z; with k = 1/16 this maps |z| > b/4 onto the exterior of E(0,1,0).
pub fn joukowski_map(k: Complex64) -> AnalyticMap {
    AnalyticMap::Rational(Rational::new(vec![-k, ZERO, ONE], vec![ZERO, ONE]))
}
