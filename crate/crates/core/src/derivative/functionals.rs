use std::sync::Arc;

use num_complex::Complex64;

use super::contour::{circle_points, contour_integral};
use super::{BoundaryFunctional, Evaluation, FunctionalKind};
use crate::conformal::{joukowski_map, schwarzian, AnalyticMap, ComplexPoint};
use crate::error::{Error, Result};
use crate::geometry::{signed_area, winding_number};

fn map_points(g: &AnalyticMap, pts: &[Complex64]) -> Result<Vec<Complex64>> {
    pts.iter().map(|&z| g.eval(z)).collect()
}

/// Signed area enclosed by g(curve).
#[derive(Debug, Clone)]
pub struct AreaFunctional {
    pub curve: Vec<Complex64>,
}

impl BoundaryFunctional for AreaFunctional {
    fn kind(&self) -> FunctionalKind {
        FunctionalKind::ClosedForm
    }

    fn eval(&self, g: &AnalyticMap, _seed: Option<u64>) -> Result<Evaluation> {
        Ok(Evaluation::exact(signed_area(&map_points(g, &self.curve)?)))
    }

    fn probe_points(&self) -> Vec<Complex64> {
        self.curve.clone()
    }
}

/// Winding number of g(curve) around g(point).
#[derive(Debug, Clone)]
pub struct WindingFunctional {
    pub curve: Vec<Complex64>,
    pub point: Complex64,
}

impl BoundaryFunctional for WindingFunctional {
    fn kind(&self) -> FunctionalKind {
        FunctionalKind::ClosedForm
    }

    fn eval(&self, g: &AnalyticMap, _seed: Option<u64>) -> Result<Evaluation> {
        let c = map_points(g, &self.curve)?;
        Ok(Evaluation::exact(winding_number(&c, g.eval(self.point)?) as f64))
    }

    fn probe_points(&self) -> Vec<Complex64> {
        let mut p = self.curve.clone();
        p.push(self.point);
        p
    }
}

pub type PointFn = Arc<dyn Fn(&[Complex64]) -> f64 + Send + Sync>;

/// f(g(z_1), …, g(z_n)) for dimensionless marked points in the plane.
#[derive(Clone)]
pub struct PointFunctional {
    pub points: Vec<Complex64>,
    pub f: PointFn,
}

impl PointFunctional {
    pub fn new(points: Vec<Complex64>, f: impl Fn(&[Complex64]) -> f64 + Send + Sync + 'static) -> Self {
        PointFunctional { points, f: Arc::new(f) }
    }
}

impl BoundaryFunctional for PointFunctional {
    fn kind(&self) -> FunctionalKind {
        FunctionalKind::ClosedForm
    }

    fn eval(&self, g: &AnalyticMap, _seed: Option<u64>) -> Result<Evaluation> {
        Ok(Evaluation::exact((self.f)(&map_points(g, &self.points)?)))
    }

    fn probe_points(&self) -> Vec<Complex64> {
        self.points.clone()
    }
}

/// Marked points in the upper half-plane. A deformation id + ηh of ℍ is
/// followed by the map back onto ℍ, which to first order in η moves z to
/// z + η(h(z) + h*(z)) with h*(z) = conj(h(conj z)).
#[derive(Clone)]
pub struct HalfPlanePointFunctional {
    pub points: Vec<Complex64>,
    pub f: PointFn,
}

impl HalfPlanePointFunctional {
    pub fn new(points: Vec<Complex64>, f: impl Fn(&[Complex64]) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if points.iter().any(|z| !(z.im > 0.0)) {
            return Err(Error::Domain("marked points must lie in the upper half-plane".into()));
        }
        Ok(HalfPlanePointFunctional { points, f: Arc::new(f) })
    }
}

impl BoundaryFunctional for HalfPlanePointFunctional {
    fn kind(&self) -> FunctionalKind {
        FunctionalKind::ClosedForm
    }

    fn eval(&self, g: &AnalyticMap, _seed: Option<u64>) -> Result<Evaluation> {
        let moved = match g {
            AnalyticMap::Identity => self.points.clone(),
            AnalyticMap::Perturbation { eta, field } => {
                let sym = field.clone().symmetrized();
                self.points.iter().map(|&z| Ok(z + eta * sym.eval(z)?)).collect::<Result<Vec<_>>>()?
            }
            _ => return Err(Error::NotImplemented("half-plane functional needs id + ηh".into())),
        };
        if moved.iter().any(|z| !(z.im > 0.0)) {
            return Err(Error::Domain("deformation pushed a point out of the half-plane".into()));
        }
        Ok(Evaluation::exact((self.f)(&moved)))
    }

    fn probe_points(&self) -> Vec<Complex64> {
        let mut p = self.points.clone();
        p.extend(self.points.iter().map(|z| z.conj()));
        p
    }
}

/// log F; derivatives follow the chain rule through `reduce`.
#[derive(Clone)]
pub struct LogFunctional<F>(pub F);

impl<F: BoundaryFunctional> BoundaryFunctional for LogFunctional<F> {
    fn kind(&self) -> FunctionalKind {
        self.0.kind()
    }

    fn eval(&self, g: &AnalyticMap, seed: Option<u64>) -> Result<Evaluation> {
        let e = self.0.eval(g, seed)?;
        Ok(Evaluation { value: e.value.ln(), table: e.table })
    }

    fn reduce(&self, means: &[f64]) -> f64 {
        self.0.reduce(means).ln()
    }

    fn probe_points(&self) -> Vec<Complex64> {
        self.0.probe_points()
    }
}

/// The functional whose first variation is
/// F(id + ηh) = F₀ + 2 Re[η ∮_Γ dz h(z) S(z)],
/// i.e. one with global holomorphic derivative S outside the contour Γ.
/// Defined only on id and on id + ηh.
#[derive(Debug, Clone)]
pub struct ContourFunctional {
    pub base: f64,
    pub contour: Vec<Complex64>,
    pub density: Vec<Complex64>,
}

impl ContourFunctional {
    pub fn new(base: f64, contour: Vec<Complex64>, s: impl Fn(Complex64) -> Result<Complex64>) -> Result<Self> {
        let density = contour.iter().map(|&z| s(z)).collect::<Result<Vec<_>>>()?;
        Ok(ContourFunctional { base, contour, density })
    }

    /// log Z(C|D) to first order for C the exterior of E(0,1,0):
    /// S(z) = (c/12){s, z} with s mapping C onto the disk.
    pub fn schwarzian_tail(c: f64, radius: f64, n: usize) -> Result<Self> {
        ContourFunctional::new(0.0, circle_points(Complex64::new(0.0, 0.0), radius, n), |z| {
            Ok(ellipse_exterior_schwarzian(z)? * (c / 12.0))
        })
    }
}

impl BoundaryFunctional for ContourFunctional {
    fn kind(&self) -> FunctionalKind {
        FunctionalKind::ClosedForm
    }

    fn eval(&self, g: &AnalyticMap, _seed: Option<u64>) -> Result<Evaluation> {
        match g {
            AnalyticMap::Identity => Ok(Evaluation::exact(self.base)),
            AnalyticMap::Perturbation { eta, field } => {
                let v: Vec<Complex64> = self
                    .contour
                    .iter()
                    .zip(&self.density)
                    .map(|(&z, s)| Ok(field.eval(z)? * s))
                    .collect::<Result<_>>()?;
                let i = contour_integral(&v, &self.contour)?;
                Ok(Evaluation::exact(self.base + 2.0 * (eta * i).re))
            }
            _ => Err(Error::NotImplemented("contour functional needs id + ηh".into())),
        }
    }

    fn probe_points(&self) -> Vec<Complex64> {
        self.contour.clone()
    }
}

/// {s, z} for a conformal s from the exterior of E(0,1,0) onto the disk,
/// via ζ ↦ ζ − 1/(16ζ) on |ζ| > 1/4 and {s,z} = −{J,ζ}/J'(ζ)².
pub fn ellipse_exterior_schwarzian(z: Complex64) -> Result<Complex64> {
    let k = Complex64::new(1.0 / 16.0, 0.0);
    let disc = (z * z + 4.0 * k).sqrt();
    let (a, b) = ((z + disc) / 2.0, (z - disc) / 2.0);
    let zeta = if a.norm() >= b.norm() { a } else { b };
    if zeta.norm() <= 0.25 {
        return Err(Error::Domain(format!("{z} is not outside the ellipse")));
    }
    let j = joukowski_map(k);
    let sj = schwarzian(&j, ComplexPoint::Finite(zeta))?;
    let d1 = j.taylor(zeta)?[1];
    Ok(-sj / (d1 * d1))
}
