//! Planar polyline predicates. Closed polylines are stored without repeating
//! the first vertex; segment i joins vertex i to vertex (i+1) mod n.

use num_complex::Complex64;

/// Touching tolerance shared by every geometric predicate.
pub const TOUCH_TOL: f64 = 1e-12;

#[inline]
pub fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

#[inline]
pub fn orient(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    cross(b - a, c - a)
}

pub fn segment_point_distance(a: Complex64, b: Complex64, p: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// True iff the closed segments cross properly or come within `tol`.
pub fn segments_intersect(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64, tol: f64) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    segment_point_distance(q1, q2, p1) <= tol
        || segment_point_distance(q1, q2, p2) <= tol
        || segment_point_distance(p1, p2, q1) <= tol
        || segment_point_distance(p1, p2, q2) <= tol
}

pub fn signed_area(pts: &[Complex64]) -> f64 {
    let n = pts.len();
    let mut s = 0.0;
    for i in 0..n {
        s += cross(pts[i], pts[(i + 1) % n]);
    }
    0.5 * s
}

pub fn perimeter(pts: &[Complex64]) -> f64 {
    let n = pts.len();
    (0..n).map(|i| (pts[(i + 1) % n] - pts[i]).norm()).sum()
}

pub fn max_chord(pts: &[Complex64]) -> f64 {
    let n = pts.len();
    (0..n).map(|i| (pts[(i + 1) % n] - pts[i]).norm()).fold(0.0, f64::max)
}

/// Distance from z to the closed polyline.
pub fn polyline_distance(pts: &[Complex64], z: Complex64) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| segment_point_distance(pts[i], pts[(i + 1) % n], z))
        .fold(f64::INFINITY, f64::min)
}

/// Winding number of the closed polyline around z (z assumed off the curve).
pub fn winding_number(pts: &[Complex64], z: Complex64) -> i32 {
    let n = pts.len();
    let mut wn = 0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        if a.im <= z.im {
            if b.im > z.im && orient(a, b, z) > 0.0 {
                wn += 1;
            }
        } else if b.im <= z.im && orient(a, b, z) < 0.0 {
            wn -= 1;
        }
    }
    wn
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Complex64,
    pub max: Complex64,
}

impl BBox {
    pub fn of(pts: &[Complex64]) -> BBox {
        let mut b = BBox {
            min: Complex64::new(f64::INFINITY, f64::INFINITY),
            max: Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        };
        for p in pts {
            b.min.re = b.min.re.min(p.re);
            b.min.im = b.min.im.min(p.im);
            b.max.re = b.max.re.max(p.re);
            b.max.im = b.max.im.max(p.im);
        }
        b
    }

    pub fn overlaps(&self, o: &BBox, tol: f64) -> bool {
        self.min.re <= o.max.re + tol
            && o.min.re <= self.max.re + tol
            && self.min.im <= o.max.im + tol
            && o.min.im <= self.max.im + tol
    }

    pub fn contains(&self, z: Complex64, tol: f64) -> bool {
        z.re >= self.min.re - tol && z.re <= self.max.re + tol && z.im >= self.min.im - tol && z.im <= self.max.im + tol
    }

    /// Lower bound on the distance from z to anything inside the box.
    pub fn distance(&self, z: Complex64) -> f64 {
        let dx = (self.min.re - z.re).max(0.0).max(z.re - self.max.re);
        let dy = (self.min.im - z.im).max(0.0).max(z.im - self.max.im);
        (dx * dx + dy * dy).sqrt()
    }
}

struct Seg {
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
    a: Complex64,
    b: Complex64,
    owner: u8,
    index: usize,
}

fn closed_segments(pts: &[Complex64], owner: u8) -> Vec<Seg> {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let a = pts[i];
            let b = pts[(i + 1) % n];
            Seg {
                xmin: a.re.min(b.re),
                xmax: a.re.max(b.re),
                ymin: a.im.min(b.im),
                ymax: a.im.max(b.im),
                a,
                b,
                owner,
                index: i,
            }
        })
        .collect()
}

/// Sweep over x: reports whether any segment of `a` meets any segment of `b`
/// within the touching tolerance.
pub fn polylines_intersect(a: &[Complex64], b: &[Complex64]) -> bool {
    if a.is_empty() || b.is_empty() {
        return false;
    }
    if !BBox::of(a).overlaps(&BBox::of(b), TOUCH_TOL) {
        return false;
    }
    let mut segs = closed_segments(a, 0);
    segs.extend(closed_segments(b, 1));
    segs.sort_by(|s, t| s.xmin.total_cmp(&t.xmin));
    let mut active: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for k in 0..segs.len() {
        let s = &segs[k];
        let x0 = s.xmin - TOUCH_TOL;
        for list in active.iter_mut() {
            list.retain(|&j| segs[j].xmax >= x0);
        }
        let other = 1 - s.owner as usize;
        for &j in &active[other] {
            let t = &segs[j];
            if t.ymin <= s.ymax + TOUCH_TOL
                && s.ymin <= t.ymax + TOUCH_TOL
                && segments_intersect(s.a, s.b, t.a, t.b, TOUCH_TOL)
            {
                return true;
            }
        }
        active[s.owner as usize].push(k);
    }
    false
}

/// All-pairs version of [`polylines_intersect`].
pub fn polylines_intersect_bruteforce(a: &[Complex64], b: &[Complex64]) -> bool {
    let (n, m) = (a.len(), b.len());
    for i in 0..n {
        for j in 0..m {
            if segments_intersect(a[i], a[(i + 1) % n], b[j], b[(j + 1) % m], TOUCH_TOL) {
                return true;
            }
        }
    }
    false
}

/// No two non-adjacent segments of the closed polyline meet.
pub fn is_simple(pts: &[Complex64]) -> bool {
    let n = pts.len();
    if n < 3 {
        return false;
    }
    let mut segs = closed_segments(pts, 0);
    segs.sort_by(|s, t| s.xmin.total_cmp(&t.xmin));
    let mut active: Vec<usize> = Vec::new();
    for k in 0..segs.len() {
        let s = &segs[k];
        active.retain(|&j| segs[j].xmax >= s.xmin);
        for &j in &active {
            let t = &segs[j];
            let d = (s.index as isize - t.index as isize).rem_euclid(n as isize) as usize;
            if d == 1 || d == n - 1 {
                continue;
            }
            if t.ymin <= s.ymax && s.ymin <= t.ymax && segments_intersect(s.a, s.b, t.a, t.b, 0.0) {
                return false;
            }
        }
        active.push(k);
    }
    true
}

/// Banded edge index for fast winding-number and near-boundary queries on a
/// fixed closed polyline.
#[derive(Debug, Clone)]
pub struct PolygonIndex {
    pts: Vec<Complex64>,
    ymin: f64,
    band_h: f64,
    bands: Vec<Vec<u32>>,
    pub bbox: BBox,
}

impl PolygonIndex {
    pub fn new(pts: Vec<Complex64>) -> Self {
        let bbox = BBox::of(&pts);
        let n = pts.len();
        let nb = (n / 4).clamp(1, 4096);
        let h = ((bbox.max.im - bbox.min.im) / nb as f64).max(1e-300);
        let mut bands = vec![Vec::new(); nb];
        for i in 0..n {
            let a = pts[i];
            let b = pts[(i + 1) % n];
            let lo = (((a.im.min(b.im) - TOUCH_TOL - bbox.min.im) / h).floor().max(0.0) as usize).min(nb - 1);
            let hi = (((a.im.max(b.im) + TOUCH_TOL - bbox.min.im) / h).floor().max(0.0) as usize).min(nb - 1);
            for band in bands.iter_mut().take(hi + 1).skip(lo) {
                band.push(i as u32);
            }
        }
        PolygonIndex { pts, ymin: bbox.min.im, band_h: h, bands, bbox }
    }

    pub fn points(&self) -> &[Complex64] {
        &self.pts
    }

    fn band(&self, y: f64) -> Option<&[u32]> {
        let k = ((y - self.ymin) / self.band_h).floor();
        if k < 0.0 || k as usize >= self.bands.len() {
            if y >= self.ymin - TOUCH_TOL && y <= self.bbox.max.im + TOUCH_TOL {
                let k = if k < 0.0 { 0 } else { self.bands.len() - 1 };
                return Some(&self.bands[k]);
            }
            return None;
        }
        Some(&self.bands[k as usize])
    }

    pub fn winding_number(&self, z: Complex64) -> i32 {
        let n = self.pts.len();
        let Some(band) = self.band(z.im) else { return 0 };
        let mut wn = 0;
        for &i in band {
            let a = self.pts[i as usize];
            let b = self.pts[(i as usize + 1) % n];
            if a.im <= z.im {
                if b.im > z.im && orient(a, b, z) > 0.0 {
                    wn += 1;
                }
            } else if b.im <= z.im && orient(a, b, z) < 0.0 {
                wn -= 1;
            }
        }
        wn
    }

    /// True if z lies within `tol` of the polyline.
    pub fn near(&self, z: Complex64, tol: f64) -> bool {
        if !self.bbox.contains(z, tol) {
            return false;
        }
        let n = self.pts.len();
        let lo = self.band(z.im - tol);
        let hi = self.band(z.im + tol);
        for band in [lo, self.band(z.im), hi].into_iter().flatten() {
            for &i in band {
                if segment_point_distance(self.pts[i as usize], self.pts[(i as usize + 1) % n], z) <= tol {
                    return true;
                }
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn circle(c: Complex64, r: f64, n: usize) -> Vec<Complex64> {
        (0..n).map(|k| c + Complex64::from_polar(r, 2.0 * PI * k as f64 / n as f64)).collect()
    }

    #[test]
    fn concentric_circles_do_not_meet() {
        let a = circle(Complex64::new(0.0, 0.0), 1.0, 200);
        let b = circle(Complex64::new(0.0, 0.0), 2.0, 300);
        assert!(!polylines_intersect(&a, &b));
    }

    #[test]
    fn circle_meets_box_through_origin() {
        let a = circle(Complex64::new(0.0, 0.0), 1.0, 200);
        let bx = vec![
            Complex64::new(-2.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(2.0, 3.0),
            Complex64::new(-2.0, 3.0),
        ];
        assert!(polylines_intersect(&a, &bx));
    }

    #[test]
    fn winding_and_area_of_ccw_square() {
        let sq = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(0.0, 1.0),
        ];
        assert_eq!(signed_area(&sq), 1.0);
        assert_eq!(winding_number(&sq, Complex64::new(0.5, 0.5)), 1);
        assert_eq!(winding_number(&sq, Complex64::new(1.5, 0.5)), 0);
        let idx = PolygonIndex::new(sq.clone());
        assert_eq!(idx.winding_number(Complex64::new(0.5, 0.5)), 1);
        assert!(idx.near(Complex64::new(0.5, 1e-13), TOUCH_TOL));
    }

    #[test]
    fn figure_eight_is_not_simple() {
        let f = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
        ];
        assert!(!is_simple(&f));
        assert!(is_simple(&circle(Complex64::new(0.0, 0.0), 1.0, 64)));
    }

    fn star(center: (f64, f64), radii: Vec<f64>) -> Vec<Complex64> {
        let n = radii.len();
        radii
            .iter()
            .enumerate()
            .map(|(k, r)| Complex64::new(center.0, center.1) + Complex64::from_polar(*r, 2.0 * PI * k as f64 / n as f64))
            .collect()
    }

    proptest! {
        #[test]
        fn sweep_matches_all_pairs(
            ca in (-1.0f64..1.0, -1.0f64..1.0),
            cb in (-1.0f64..1.0, -1.0f64..1.0),
            ra in proptest::collection::vec(0.2f64..1.0, 3..40),
            rb in proptest::collection::vec(0.2f64..1.0, 3..40),
        ) {
            let a = star(ca, ra);
            let b = star(cb, rb);
            prop_assert_eq!(polylines_intersect(&a, &b), polylines_intersect_bruteforce(&a, &b));
        }

        #[test]
        fn banded_winding_matches_plain(
            r in proptest::collection::vec(0.2f64..1.0, 3..60),
            zx in -1.2f64..1.2, zy in -1.2f64..1.2,
        ) {
            let s = star((0.0, 0.0), r);
            let z = Complex64::new(zx, zy);
            prop_assume!(polyline_distance(&s, z) > 1e-9);
            let idx = PolygonIndex::new(s.clone());
            prop_assert_eq!(idx.winding_number(z), winding_number(&s, z));
        }
    }
}
