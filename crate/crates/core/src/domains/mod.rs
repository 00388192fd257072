//! Domain descriptions, oriented boundaries, partners and rasterization.

mod raster;

pub use raster::{rasterize, LatticeMask, NONE};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conformal::{unit_ellipse_series, AnalyticMap, ComplexPoint, EllipseSpec, MobiusMap};
use crate::error::{Error, Result};
use crate::geometry::{self, PolygonIndex, TOUCH_TOL};

/// Resolution used whenever a domain is only known through its boundary polyline.
pub const POLY_RES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Disk { center: Complex64, radius: f64 },
    EllipseInterior { ellipse: EllipseSpec },
    MobiusImage { base: Box<DomainSpec>, map: MobiusMap },
    /// map(𝔻) for a map conformal on the closed unit disk.
    AnalyticImage { map: AnalyticMap },
    /// Region bounded by map(∂base); map conformal near ∂base only.
    Mapped { base: Box<DomainSpec>, map: AnalyticMap },
    /// Complement of the closure of `inner`.
    Exterior { inner: Box<DomainSpec> },
    /// outer ∖ closure(inner).
    AnnulusDifference { outer: Box<DomainSpec>, inner: Box<DomainSpec> },
    /// Large disk of radius R about the origin standing in for the sphere.
    SphereProxy { radius: f64 },
}

impl DomainSpec {
    pub fn unit_disk() -> Self {
        DomainSpec::Disk { center: Complex64::new(0.0, 0.0), radius: 1.0 }
    }

    pub fn disk(center: Complex64, radius: f64) -> Self {
        DomainSpec::Disk { center, radius }
    }

    pub fn ellipse(e: EllipseSpec) -> Self {
        DomainSpec::EllipseInterior { ellipse: e }
    }

    pub fn mobius_image(self, map: MobiusMap) -> Self {
        DomainSpec::MobiusImage { base: Box::new(self), map }
    }

    pub fn mapped(self, map: AnalyticMap) -> Self {
        DomainSpec::Mapped { base: Box::new(self), map }
    }

    pub fn exterior(self) -> Self {
        DomainSpec::Exterior { inner: Box::new(self) }
    }

    pub fn minus(self, inner: DomainSpec) -> Self {
        DomainSpec::AnnulusDifference { outer: Box::new(self), inner: Box::new(inner) }
    }

    /// Structural validation of parameters.
    pub fn validate(&self) -> Result<()> {
        match self {
            DomainSpec::Disk { center, radius } => {
                if !(*radius > 0.0 && radius.is_finite()) || !center.re.is_finite() || !center.im.is_finite() {
                    return Err(Error::Domain(format!("bad disk radius {radius}")));
                }
            }
            DomainSpec::SphereProxy { radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::Domain(format!("bad proxy radius {radius}")));
                }
            }
            DomainSpec::EllipseInterior { ellipse } => {
                EllipseSpec::new(ellipse.w, ellipse.eps, ellipse.theta, ellipse.b)?;
            }
            DomainSpec::MobiusImage { base, .. } | DomainSpec::Mapped { base, .. } => base.validate()?,
            DomainSpec::AnalyticImage { .. } => {}
            DomainSpec::Exterior { inner } => inner.validate()?,
            DomainSpec::AnnulusDifference { outer, inner } => {
                outer.validate()?;
                inner.validate()?;
                let o = PreparedDomain::new(outer)?;
                for curve in boundary_components(inner, 512)? {
                    if curve.points.iter().any(|p| !o.contains(ComplexPoint::Finite(*p))) {
                        return Err(Error::Domain("annulus inner closure not inside outer".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// True for variants covered by [`canonical_disk_map`].
    pub fn is_simply_connected_family(&self) -> bool {
        match self {
            DomainSpec::Disk { .. }
            | DomainSpec::EllipseInterior { .. }
            | DomainSpec::AnalyticImage { .. }
            | DomainSpec::SphereProxy { .. } => true,
            DomainSpec::MobiusImage { base, .. } => base.is_simply_connected_family(),
            _ => false,
        }
    }
}

/// Closed polyline with the domain on its left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub points: Vec<Complex64>,
    /// True when the enclosed bounded region is the domain side.
    pub ccw: bool,
}

impl BoundaryCurve {
    pub fn new(points: Vec<Complex64>) -> Self {
        let ccw = geometry::signed_area(&points) > 0.0;
        BoundaryCurve { points, ccw }
    }

    pub fn signed_area(&self) -> f64 {
        geometry::signed_area(&self.points)
    }

    pub fn is_simple(&self) -> bool {
        geometry::is_simple(&self.points)
    }

    pub fn reversed(&self) -> Self {
        let mut p = self.points.clone();
        p.reverse();
        BoundaryCurve::new(p)
    }

    pub fn map(&self, f: &dyn Fn(Complex64) -> Result<Complex64>) -> Result<Self> {
        Ok(BoundaryCurve::new(self.points.iter().map(|&z| f(z)).collect::<Result<Vec<_>>>()?))
    }

    /// True when z lies strictly on the domain side of this component.
    pub fn left_contains(&self, z: Complex64) -> bool {
        let wn = geometry::winding_number(&self.points, z);
        if self.ccw {
            wn != 0
        } else {
            wn == 0
        }
    }
}

fn circle(center: Complex64, r: f64, n: usize) -> Vec<Complex64> {
    (0..n).map(|k| center + Complex64::from_polar(r, 2.0 * PI * k as f64 / n as f64)).collect()
}

/// n points on ∂d with d on the left (counter-clockwise for bounded domains).
pub fn boundary_polyline(d: &DomainSpec, n: usize) -> Result<BoundaryCurve> {
    if n < 4 {
        return Err(Error::Domain(format!("polyline needs at least 4 points, got {n}")));
    }
    let mut comps = boundary_components(d, n)?;
    if comps.len() != 1 {
        return Err(Error::NotImplemented("multi-component boundary; use boundary_components".into()));
    }
    Ok(comps.pop().unwrap())
}

/// Every boundary component, each with d on its left.
pub fn boundary_components(d: &DomainSpec, n: usize) -> Result<Vec<BoundaryCurve>> {
    Ok(match d {
        DomainSpec::Disk { center, radius } => vec![BoundaryCurve::new(circle(*center, *radius, n))],
        DomainSpec::SphereProxy { radius } => vec![BoundaryCurve::new(circle(Complex64::new(0.0, 0.0), *radius, n))],
        DomainSpec::EllipseInterior { ellipse } => vec![BoundaryCurve::new(
            (0..n).map(|k| ellipse.point(2.0 * PI * k as f64 / n as f64)).collect(),
        )],
        DomainSpec::AnalyticImage { map } => {
            let pts = circle(Complex64::new(0.0, 0.0), 1.0, n);
            vec![BoundaryCurve::new(pts.iter().map(|&z| map.eval(z)).collect::<Result<Vec<_>>>()?)]
        }
        DomainSpec::MobiusImage { base, map } => boundary_components(base, n)?
            .iter()
            .map(|c| c.map(&|z| map.eval(z)))
            .collect::<Result<Vec<_>>>()?,
        DomainSpec::Mapped { base, map } => boundary_components(base, n)?
            .iter()
            .map(|c| c.map(&|z| map.eval(z)))
            .collect::<Result<Vec<_>>>()?,
        DomainSpec::Exterior { inner } => boundary_components(inner, n)?.iter().map(|c| c.reversed()).collect(),
        DomainSpec::AnnulusDifference { outer, inner } => {
            let mut v = boundary_components(outer, n)?;
            v.extend(boundary_components(inner, n)?.iter().map(|c| c.reversed()));
            v
        }
    })
}

/// Membership predicate with the boundary (within 1e-12) excluded.
#[derive(Debug, Clone)]
pub enum PreparedDomain {
    Disk { center: Complex64, radius: f64 },
    Ellipse(EllipseSpec),
    Mobius { inverse: MobiusMap, base: Box<PreparedDomain> },
    Polygons(Vec<(PolygonIndex, bool)>),
    Exterior(Box<PreparedDomain>),
    Difference(Box<PreparedDomain>, Box<PreparedDomain>),
}

impl PreparedDomain {
    pub fn new(d: &DomainSpec) -> Result<Self> {
        Self::with_resolution(d, POLY_RES)
    }

    pub fn with_resolution(d: &DomainSpec, n: usize) -> Result<Self> {
        Ok(match d {
            DomainSpec::Disk { center, radius } => PreparedDomain::Disk { center: *center, radius: *radius },
            DomainSpec::SphereProxy { radius } => {
                PreparedDomain::Disk { center: Complex64::new(0.0, 0.0), radius: *radius }
            }
            DomainSpec::EllipseInterior { ellipse } => PreparedDomain::Ellipse(*ellipse),
            DomainSpec::MobiusImage { base, map } => PreparedDomain::Mobius {
                inverse: map.inverse(),
                base: Box::new(Self::with_resolution(base, n)?),
            },
            DomainSpec::AnalyticImage { .. } | DomainSpec::Mapped { .. } => PreparedDomain::Polygons(
                boundary_components(d, n)?
                    .into_iter()
                    .map(|c| {
                        let ccw = c.ccw;
                        (PolygonIndex::new(c.points), ccw)
                    })
                    .collect(),
            ),
            DomainSpec::Exterior { inner } => PreparedDomain::Exterior(Box::new(Self::with_resolution(inner, n)?)),
            DomainSpec::AnnulusDifference { outer, inner } => PreparedDomain::Difference(
                Box::new(Self::with_resolution(outer, n)?),
                Box::new(Self::with_resolution(inner, n)?),
            ),
        })
    }

    pub fn contains(&self, z: ComplexPoint) -> bool {
        match self {
            PreparedDomain::Disk { center, radius } => match z {
                ComplexPoint::Infinity => false,
                ComplexPoint::Finite(z) => (z - center).norm() < radius - TOUCH_TOL,
            },
            PreparedDomain::Ellipse(e) => match z {
                ComplexPoint::Infinity => false,
                ComplexPoint::Finite(z) => e.implicit(z) < 1.0 && e.boundary_distance(z) > TOUCH_TOL,
            },
            PreparedDomain::Mobius { inverse, base } => base.contains(inverse.apply(z)),
            PreparedDomain::Polygons(comps) => comps.iter().all(|(idx, ccw)| match z {
                ComplexPoint::Infinity => !ccw,
                ComplexPoint::Finite(z) => {
                    if idx.near(z, TOUCH_TOL) {
                        return false;
                    }
                    let wn = idx.winding_number(z);
                    if *ccw {
                        wn != 0
                    } else {
                        wn == 0
                    }
                }
            }),
            PreparedDomain::Exterior(inner) => !inner.contains(z) && !inner.on_boundary(z),
            PreparedDomain::Difference(o, i) => o.contains(z) && !i.contains(z) && !i.on_boundary(z),
        }
    }

    /// Within the touching tolerance of the boundary.
    pub fn on_boundary(&self, z: ComplexPoint) -> bool {
        match self {
            PreparedDomain::Disk { center, radius } => match z {
                ComplexPoint::Infinity => false,
                ComplexPoint::Finite(z) => ((z - center).norm() - radius).abs() <= TOUCH_TOL,
            },
            PreparedDomain::Ellipse(e) => match z {
                ComplexPoint::Infinity => false,
                ComplexPoint::Finite(z) => e.boundary_distance(z) <= TOUCH_TOL,
            },
            PreparedDomain::Mobius { inverse, base } => base.on_boundary(inverse.apply(z)),
            PreparedDomain::Polygons(comps) => match z {
                ComplexPoint::Infinity => false,
                ComplexPoint::Finite(z) => comps.iter().any(|(idx, _)| idx.near(z, TOUCH_TOL)),
            },
            PreparedDomain::Exterior(inner) => inner.on_boundary(z),
            PreparedDomain::Difference(o, i) => o.on_boundary(z) || i.on_boundary(z),
        }
    }
}

/// True iff z lies in the open set d.
pub fn contains_point(d: &DomainSpec, z: ComplexPoint) -> bool {
    match PreparedDomain::new(d) {
        Ok(p) => p.contains(z),
        Err(_) => false,
    }
}

/// The fixed section g_A: 𝔻 → A.
pub fn canonical_disk_map(d: &DomainSpec) -> Result<AnalyticMap> {
    match d {
        DomainSpec::Disk { center, radius } => {
            if *center == Complex64::new(0.0, 0.0) && *radius == 1.0 {
                Ok(AnalyticMap::Identity)
            } else {
                Ok(AnalyticMap::Mobius(MobiusMap::affine(Complex64::new(*radius, 0.0), *center)?))
            }
        }
        DomainSpec::SphereProxy { radius } => Ok(AnalyticMap::Mobius(MobiusMap::affine(
            Complex64::new(*radius, 0.0),
            Complex64::new(0.0, 0.0),
        )?)),
        DomainSpec::EllipseInterior { ellipse } => {
            let s = unit_ellipse_series(ellipse.b)?;
            let series =
                AnalyticMap::Series { center: Complex64::new(0.0, 0.0), coeffs: s.coeffs.clone(), radius: s.radius };
            let place = MobiusMap::affine(Complex64::from_polar(ellipse.eps, ellipse.theta), ellipse.w)?;
            Ok(series.then(AnalyticMap::Mobius(place)))
        }
        DomainSpec::MobiusImage { base, map } => Ok(canonical_disk_map(base)?.then(AnalyticMap::Mobius(*map))),
        DomainSpec::AnalyticImage { map } => Ok(map.clone()),
        other => Err(Error::NotImplemented(format!("canonical map for {}", variant_name(other)))),
    }
}

fn variant_name(d: &DomainSpec) -> &'static str {
    match d {
        DomainSpec::Disk { .. } => "disk",
        DomainSpec::EllipseInterior { .. } => "ellipse_interior",
        DomainSpec::MobiusImage { .. } => "mobius_image",
        DomainSpec::AnalyticImage { .. } => "analytic_image",
        DomainSpec::Mapped { .. } => "mapped",
        DomainSpec::Exterior { .. } => "exterior",
        DomainSpec::AnnulusDifference { .. } => "annulus_difference",
        DomainSpec::SphereProxy { .. } => "sphere_proxy",
    }
}

/// B = g_A((1−ε)𝔻).
///
/// For `Mapped` domains the partner is transported through the map; this is a
/// valid corridor profile but not the canonical one.
pub fn partner_of(a: &DomainSpec, eps_fat: f64) -> Result<DomainSpec> {
    if !(eps_fat > 0.0 && eps_fat < 1.0) {
        return Err(Error::Domain(format!("eps_fat = {eps_fat} outside (0, 1)")));
    }
    let s = 1.0 - eps_fat;
    Ok(match a {
        DomainSpec::Disk { center, radius } => DomainSpec::Disk { center: *center, radius: radius * s },
        DomainSpec::SphereProxy { radius } => DomainSpec::Disk { center: Complex64::new(0.0, 0.0), radius: radius * s },
        DomainSpec::MobiusImage { base, map } => DomainSpec::MobiusImage { base: Box::new(partner_of(base, eps_fat)?), map: *map },
        DomainSpec::Mapped { base, map } => DomainSpec::Mapped { base: Box::new(partner_of(base, eps_fat)?), map: map.clone() },
        DomainSpec::EllipseInterior { .. } | DomainSpec::AnalyticImage { .. } => {
            let g = canonical_disk_map(a)?;
            let shrink = AnalyticMap::Mobius(MobiusMap::affine(Complex64::new(s, 0.0), Complex64::new(0.0, 0.0))?);
            DomainSpec::AnalyticImage { map: shrink.then(g) }
        }
        other => return Err(Error::NotImplemented(format!("partner for {}", variant_name(other)))),
    })
}

/// Hausdorff distance between two closed polylines, sampled at the vertices.
pub fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let d1 = a.iter().map(|&z| geometry::polyline_distance(b, z)).fold(0.0, f64::max);
    let d2 = b.iter().map(|&z| geometry::polyline_distance(a, z)).fold(0.0, f64::max);
    d1.max(d2)
}
