//! Predicates on loop configurations: corridor crossing, parity of
//! surrounding loops, pair counts, and their boolean combinations.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conformal::{AnalyticMap, ComplexPoint, MobiusMap};
use crate::domains::{boundary_components, contains_point, BoundaryCurve, DomainSpec, LatticeMask, PreparedDomain};
use crate::error::{Error, Result};
use crate::geometry::{
    perimeter, polyline_distance, polylines_intersect, segment_point_distance, segments_intersect, winding_number, BBox,
    TOUCH_TOL,
};
use crate::lattice::LatticeSpec;
use crate::sampler::{Loop, LoopConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventSpec {
    Trivial,
    /// No loop meets both ∂outer and ∂inner.
    Crossing { outer: DomainSpec, inner: DomainSpec },
    /// The number of loops separating the closed disk B(z0, r) from the
    /// boundary is even. r = 0 is the spin-parity observable at z0.
    SurroundsParity { z0: Complex64, r: f64 },
    /// At least `min_count` loops surround both points.
    PairCount { z1: Complex64, z2: Complex64, min_count: u32 },
    Complement { event: Box<EventSpec> },
    Conjunction { events: Vec<EventSpec> },
}

/// Closed set outside of which an event ignores the loops.
#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    Empty,
    Region(DomainSpec),
    Points(Vec<Complex64>),
    Union(Vec<Support>),
}

impl Support {
    /// Representative points: boundary samples and centres of regions.
    pub fn sample_points(&self, n: usize) -> Result<Vec<Complex64>> {
        Ok(match self {
            Support::Empty => Vec::new(),
            Support::Points(p) => p.clone(),
            Support::Region(d) => {
                let mut v: Vec<Complex64> = boundary_components(d, n)?.into_iter().flat_map(|c| c.points).collect();
                if let DomainSpec::Disk { center, .. } = d {
                    v.push(*center);
                }
                v
            }
            Support::Union(s) => {
                let mut v = Vec::new();
                for x in s {
                    v.extend(x.sample_points(n)?);
                }
                v
            }
        })
    }

    /// True when every representative point satisfies `pred`.
    pub fn within(&self, pred: impl Fn(ComplexPoint) -> bool) -> Result<bool> {
        Ok(self.sample_points(256)?.into_iter().all(|z| pred(ComplexPoint::Finite(z))))
    }
}

impl EventSpec {
    pub fn complement(self) -> Self {
        EventSpec::Complement { event: Box::new(self) }
    }

    pub fn and(self, other: EventSpec) -> Self {
        match self {
            EventSpec::Conjunction { mut events } => {
                events.push(other);
                EventSpec::Conjunction { events }
            }
            e => EventSpec::Conjunction { events: vec![e, other] },
        }
    }

    /// Corridor event between `a` and its partner.
    pub fn corridor(a: &DomainSpec, eps_fat: f64) -> Result<Self> {
        Ok(EventSpec::Crossing { outer: a.clone(), inner: crate::domains::partner_of(a, eps_fat)? })
    }

    pub fn is_trivial(&self) -> bool {
        match self {
            EventSpec::Trivial => true,
            EventSpec::Conjunction { events } => events.iter().all(|e| e.is_trivial()),
            _ => false,
        }
    }

    pub fn support(&self) -> Support {
        match self {
            EventSpec::Trivial => Support::Empty,
            EventSpec::Crossing { outer, inner } => Support::Region(outer.clone().minus(inner.clone())),
            EventSpec::SurroundsParity { z0, r } => {
                if *r > 0.0 {
                    Support::Region(DomainSpec::disk(*z0, *r))
                } else {
                    Support::Points(vec![*z0])
                }
            }
            EventSpec::PairCount { z1, z2, .. } => Support::Points(vec![*z1, *z2]),
            EventSpec::Complement { event } => event.support(),
            EventSpec::Conjunction { events } => Support::Union(events.iter().map(|e| e.support()).collect()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EventSpec::Trivial => Ok(()),
            EventSpec::Crossing { outer, inner } => {
                outer.validate()?;
                inner.validate()
            }
            EventSpec::SurroundsParity { z0, r } => {
                if !(z0.re.is_finite() && z0.im.is_finite()) || !(*r >= 0.0 && r.is_finite()) {
                    return Err(Error::Domain(format!("surrounds_parity needs finite z0 and r ≥ 0, got {z0}, {r}")));
                }
                Ok(())
            }
            EventSpec::PairCount { z1, z2, .. } => {
                if z1 == z2 {
                    return Err(Error::Domain("pair_count needs distinct points".into()));
                }
                Ok(())
            }
            EventSpec::Complement { event } => event.validate(),
            EventSpec::Conjunction { events } => events.iter().try_for_each(|e| e.validate()),
        }
    }

    /// Image of the event under a global Möbius map.
    pub fn transformed(&self, g: &MobiusMap) -> Result<Self> {
        let pt = |z: Complex64| g.eval(z).map_err(|_| Error::Domain(format!("marked point {z} sent to infinity")));
        Ok(match self {
            EventSpec::Trivial => EventSpec::Trivial,
            EventSpec::Crossing { outer, inner } => {
                EventSpec::Crossing { outer: outer.clone().mobius_image(*g), inner: inner.clone().mobius_image(*g) }
            }
            EventSpec::SurroundsParity { z0, r } => {
                if *r == 0.0 {
                    EventSpec::SurroundsParity { z0: pt(*z0)?, r: 0.0 }
                } else {
                    if let ComplexPoint::Finite(p) = g.pole() {
                        if (p - z0).norm() <= *r {
                            return Err(Error::Domain("Möbius pole inside the parity disk".into()));
                        }
                    }
                    let q: Vec<Complex64> = (0..3)
                        .map(|k| pt(z0 + Complex64::from_polar(*r, 2.0 * std::f64::consts::PI * k as f64 / 3.0)))
                        .collect::<Result<_>>()?;
                    let (c, rad) = circumcircle(q[0], q[1], q[2]);
                    EventSpec::SurroundsParity { z0: c, r: rad }
                }
            }
            EventSpec::PairCount { z1, z2, min_count } => {
                EventSpec::PairCount { z1: pt(*z1)?, z2: pt(*z2)?, min_count: *min_count }
            }
            EventSpec::Complement { event } => event.transformed(g)?.complement(),
            EventSpec::Conjunction { events } => {
                EventSpec::Conjunction { events: events.iter().map(|e| e.transformed(g)).collect::<Result<_>>()? }
            }
        })
    }
}

impl EventSpec {
    /// Image of the event under a map conformal near its support. Domains
    /// become `Mapped` images and marked points are moved; a parity disk with
    /// r > 0 is only transported by Möbius maps.
    pub fn mapped(&self, g: &AnalyticMap) -> Result<Self> {
        match g {
            AnalyticMap::Identity => return Ok(self.clone()),
            AnalyticMap::Mobius(m) => return self.transformed(m),
            _ => {}
        }
        Ok(match self {
            EventSpec::Trivial => EventSpec::Trivial,
            EventSpec::Crossing { outer, inner } => {
                EventSpec::Crossing { outer: outer.clone().mapped(g.clone()), inner: inner.clone().mapped(g.clone()) }
            }
            EventSpec::SurroundsParity { z0, r } => {
                if *r != 0.0 {
                    return Err(Error::NotImplemented("parity disk under a non-Möbius map".into()));
                }
                EventSpec::SurroundsParity { z0: g.eval(*z0)?, r: 0.0 }
            }
            EventSpec::PairCount { z1, z2, min_count } => {
                EventSpec::PairCount { z1: g.eval(*z1)?, z2: g.eval(*z2)?, min_count: *min_count }
            }
            EventSpec::Complement { event } => event.mapped(g)?.complement(),
            EventSpec::Conjunction { events } => {
                EventSpec::Conjunction { events: events.iter().map(|e| e.mapped(g)).collect::<Result<_>>()? }
            }
        })
    }
}

fn circumcircle(a: Complex64, b: Complex64, c: Complex64) -> (Complex64, f64) {
    let (b, c) = (b - a, c - a);
    let d = 2.0 * (b.re * c.im - b.im * c.re);
    let ux = (c.im * b.norm_sqr() - b.im * c.norm_sqr()) / d;
    let uy = (b.re * c.norm_sqr() - c.re * b.norm_sqr()) / d;
    let u = Complex64::new(ux, uy);
    (a + u, u.norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    True,
    False,
    /// A marked point lies on a loop; the sample is dropped from this observable.
    Discarded,
}

impl Outcome {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Outcome::True
        } else {
            Outcome::False
        }
    }

    /// 1, 0, or NaN for discarded.
    pub fn indicator(self) -> f64 {
        match self {
            Outcome::True => 1.0,
            Outcome::False => 0.0,
            Outcome::Discarded => f64::NAN,
        }
    }
}

/// True iff any segment of the closed polyline `lp` meets `curve` within 1e-12.
pub fn curve_intersects(lp: &[Complex64], curve: &BoundaryCurve) -> bool {
    polylines_intersect(lp, &curve.points)
}

fn check_nesting(outer: &BoundaryCurve, inner: &BoundaryCurve) -> Result<()> {
    let inside = inner.points.iter().all(|&z| outer.left_contains(z) && polyline_distance(&outer.points, z) > TOUCH_TOL);
    if !inside || polylines_intersect(&outer.points, &inner.points) {
        return Err(Error::Domain("inner boundary is not strictly inside the outer one".into()));
    }
    Ok(())
}

/// True iff no loop meets both curves.
pub fn eval_crossing(cfg: &LoopConfig, outer: &BoundaryCurve, inner: &BoundaryCurve) -> Result<bool> {
    check_nesting(outer, inner)?;
    Ok(!cfg.loops.iter().any(|l| curve_intersects(&l.points, outer) && curve_intersects(&l.points, inner)))
}

/// Nonzero winding of the loop around z.
pub fn winding_surrounds(lp: &[Complex64], z: ComplexPoint) -> Result<bool> {
    let ComplexPoint::Finite(z) = z else { return Ok(false) };
    if polyline_distance(lp, z) <= TOUCH_TOL {
        return Err(Error::PointOnLoop);
    }
    Ok(winding_number(lp, z) != 0)
}

fn surrounds(l: &Loop, z: Complex64) -> Result<bool> {
    if !l.bbox.contains(z, TOUCH_TOL) {
        return Ok(false);
    }
    winding_surrounds(&l.points, ComplexPoint::Finite(z))
}

/// Number of loops surrounding both points.
pub fn pair_count(cfg: &LoopConfig, z1: ComplexPoint, z2: ComplexPoint) -> Result<usize> {
    let (Some(a), Some(b)) = (z1.finite(), z2.finite()) else {
        return Err(Error::Domain("pair_count needs finite points".into()));
    };
    let mut n = 0;
    for l in &cfg.loops {
        let sa = surrounds(l, a)?;
        let sb = surrounds(l, b)?;
        if sa && sb {
            n += 1;
        }
    }
    Ok(n)
}

/// (−1)^(number of loops surrounding z).
pub fn parity_spin_value(cfg: &LoopConfig, z: ComplexPoint) -> Result<i8> {
    let z = z.finite().ok_or_else(|| Error::Domain("parity at infinity".into()))?;
    let mut odd = false;
    for l in &cfg.loops {
        if surrounds(l, z)? {
            odd = !odd;
        }
    }
    Ok(if odd { -1 } else { 1 })
}

/// Curve with a per-triangle bucket of nearby segments, for loops whose
/// segments carry their triangle id.
#[derive(Debug, Clone)]
struct IndexedCurve {
    pts: Vec<Complex64>,
    bbox: BBox,
    buckets: HashMap<u32, Vec<u32>>,
}

fn curve_resolution(d: &DomainSpec, spacing: f64) -> Result<usize> {
    let coarse: f64 = boundary_components(d, 256)?.iter().map(|c| perimeter(&c.points)).sum();
    Ok(((8.0 * coarse / spacing).ceil() as usize).clamp(512, 1 << 16))
}

impl IndexedCurve {
    fn new(pts: Vec<Complex64>, mask: &LatticeMask) -> Self {
        let lat: &LatticeSpec = &mask.lattice;
        let reach = lat.spacing / 3f64.sqrt() + 1e-9;
        let mut buckets: HashMap<u32, Vec<u32>> = HashMap::new();
        let n = pts.len();
        for s in 0..n {
            let (a, b) = (pts[s], pts[(s + 1) % n]);
            let bb = BBox::of(&[a, b]);
            let corners = [bb.min, bb.max, Complex64::new(bb.min.re, bb.max.im), Complex64::new(bb.max.re, bb.min.im)];
            let fc: Vec<(f64, f64)> = corners.iter().map(|&z| lat.frac_coords(z)).collect();
            let i0 = fc.iter().map(|c| c.0).fold(f64::INFINITY, f64::min).floor() as i32 - 2;
            let i1 = fc.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max).ceil() as i32 + 2;
            let j0 = fc.iter().map(|c| c.1).fold(f64::INFINITY, f64::min).floor() as i32 - 2;
            let j1 = fc.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max).ceil() as i32 + 2;
            for j in j0..=j1 {
                for i in i0..=i1 {
                    for up in [true, false] {
                        let Some(t) = mask.triangle_index(i, j, up) else { continue };
                        let v = LatticeSpec::triangle_vertices(i, j, up);
                        let c = v.iter().map(|&(p, q)| lat.site_pos(p, q)).sum::<Complex64>() / 3.0;
                        if segment_point_distance(a, b, c) <= reach {
                            buckets.entry(t).or_default().push(s as u32);
                        }
                    }
                }
            }
        }
        IndexedCurve { bbox: BBox::of(&pts), pts, buckets }
    }

    fn hit(&self, l: &Loop) -> bool {
        if !l.bbox.overlaps(&self.bbox, TOUCH_TOL) {
            return false;
        }
        if l.cells.len() != l.points.len() {
            return polylines_intersect(&l.points, &self.pts);
        }
        let (n, m) = (l.points.len(), self.pts.len());
        for k in 0..n {
            let Some(segs) = self.buckets.get(&l.cells[k]) else { continue };
            let (p, q) = (l.points[k], l.points[(k + 1) % n]);
            for &s in segs {
                let s = s as usize;
                if segments_intersect(p, q, self.pts[s], self.pts[(s + 1) % m], TOUCH_TOL) {
                    return true;
                }
            }
        }
        false
    }
}

#[derive(Debug, Clone)]
enum Node {
    Trivial,
    Crossing { outer: Vec<IndexedCurve>, inner: Vec<IndexedCurve> },
    Parity { z0: Complex64, r: f64 },
    Pair { z1: Complex64, z2: Complex64, min_count: u32 },
    Not(Box<Node>),
    And(Vec<Node>),
}

/// An event compiled against a mask for repeated evaluation.
#[derive(Debug, Clone)]
pub struct PreparedEvent {
    node: Node,
}

fn prepare(e: &EventSpec, mask: &LatticeMask) -> Result<Node> {
    Ok(match e {
        EventSpec::Trivial => Node::Trivial,
        EventSpec::Crossing { outer, inner } => {
            let spacing = mask.lattice.spacing;
            let oc = boundary_components(outer, curve_resolution(outer, spacing)?)?;
            let ic = boundary_components(inner, curve_resolution(inner, spacing)?)?;
            let po = PreparedDomain::new(outer)?;
            for c in &ic {
                if !c.points.iter().all(|&z| po.contains(ComplexPoint::Finite(z))) {
                    return Err(Error::Domain("inner boundary is not strictly inside the outer one".into()));
                }
                for o in &oc {
                    if polylines_intersect(&o.points, &c.points) {
                        return Err(Error::Domain("inner and outer boundaries intersect".into()));
                    }
                }
            }
            Node::Crossing {
                outer: oc.into_iter().map(|c| IndexedCurve::new(c.points, mask)).collect(),
                inner: ic.into_iter().map(|c| IndexedCurve::new(c.points, mask)).collect(),
            }
        }
        EventSpec::SurroundsParity { z0, r } => Node::Parity { z0: *z0, r: *r },
        EventSpec::PairCount { z1, z2, min_count } => Node::Pair { z1: *z1, z2: *z2, min_count: *min_count },
        EventSpec::Complement { event } => Node::Not(Box::new(prepare(event, mask)?)),
        EventSpec::Conjunction { events } => Node::And(events.iter().map(|x| prepare(x, mask)).collect::<Result<_>>()?),
    })
}

fn separates_disk(l: &Loop, z0: Complex64, r: f64) -> Result<bool> {
    if r == 0.0 {
        return surrounds(l, z0);
    }
    let b = &l.bbox;
    if z0.re - r < b.min.re || z0.re + r > b.max.re || z0.im - r < b.min.im || z0.im + r > b.max.im {
        return Ok(false);
    }
    if polyline_distance(&l.points, z0) <= r + TOUCH_TOL {
        return Ok(false);
    }
    Ok(winding_number(&l.points, z0) != 0)
}

fn eval_node(node: &Node, cfg: &LoopConfig) -> Outcome {
    match node {
        Node::Trivial => Outcome::True,
        Node::Crossing { outer, inner } => {
            let bad = cfg.loops.iter().any(|l| outer.iter().any(|c| c.hit(l)) && inner.iter().any(|c| c.hit(l)));
            Outcome::from_bool(!bad)
        }
        Node::Parity { z0, r } => {
            let mut odd = false;
            for l in &cfg.loops {
                match separates_disk(l, *z0, *r) {
                    Ok(true) => odd = !odd,
                    Ok(false) => {}
                    Err(_) => return Outcome::Discarded,
                }
            }
            Outcome::from_bool(!odd)
        }
        Node::Pair { z1, z2, min_count } => {
            match pair_count(cfg, ComplexPoint::Finite(*z1), ComplexPoint::Finite(*z2)) {
                Ok(n) => Outcome::from_bool(n >= *min_count as usize),
                Err(_) => Outcome::Discarded,
            }
        }
        Node::Not(inner) => match eval_node(inner, cfg) {
            Outcome::True => Outcome::False,
            Outcome::False => Outcome::True,
            Outcome::Discarded => Outcome::Discarded,
        },
        Node::And(list) => {
            let mut out = Outcome::True;
            for n in list {
                match eval_node(n, cfg) {
                    Outcome::Discarded => return Outcome::Discarded,
                    Outcome::False => out = Outcome::False,
                    Outcome::True => {}
                }
            }
            out
        }
    }
}

impl PreparedEvent {
    pub fn new(e: &EventSpec, mask: &LatticeMask) -> Result<Self> {
        e.validate()?;
        Ok(PreparedEvent { node: prepare(e, mask)? })
    }

    pub fn eval(&self, cfg: &LoopConfig) -> Outcome {
        eval_node(&self.node, cfg)
    }
}

/// Whether the event's support lies inside `d` (sampled check).
pub fn supported_in(e: &EventSpec, d: &DomainSpec) -> Result<bool> {
    e.support().within(|z| contains_point(d, z))
}

#[cfg(test)]
mod tests;
