//! Triangular spin lattice with its honeycomb dual.
//!
//! Site (i, j) sits at offset + a·e^{iφ}(i + j/2 + i·j√3/2). Up triangle
//! (i, j) has vertices (i,j), (i+1,j), (i,j+1); down triangle (i, j) has
//! vertices (i+1,j), (i+1,j+1), (i,j+1). Triangle centres are the honeycomb
//! vertices and every bond is crossed by exactly one honeycomb edge.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SQRT3_2: f64 = 0.866_025_403_784_438_6;

/// Neighbour offsets in counter-clockwise order starting at angle 0.
pub const NEIGHBOURS: [(i32, i32); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    /// Lattice spacing a.
    pub spacing: f64,
    #[serde(default)]
    pub offset: Complex64,
    #[serde(default)]
    pub rotation: f64,
}

impl LatticeSpec {
    pub fn new(spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::Domain(format!("lattice spacing {spacing} must be positive")));
        }
        Ok(LatticeSpec { spacing, offset: Complex64::new(0.0, 0.0), rotation: 0.0 })
    }

    /// L sites per unit length.
    pub fn with_resolution(l: u32) -> Result<Self> {
        Self::new(1.0 / l as f64)
    }

    /// Sites per unit length.
    pub fn resolution(&self) -> f64 {
        1.0 / self.spacing
    }

    pub fn site_pos(&self, i: i32, j: i32) -> Complex64 {
        let u = Complex64::new(i as f64 + 0.5 * j as f64, SQRT3_2 * j as f64);
        self.offset + self.spacing * Complex64::from_polar(1.0, self.rotation) * u
    }

    /// Fractional lattice coordinates (i, j) of a point.
    pub fn frac_coords(&self, z: Complex64) -> (f64, f64) {
        let u = (z - self.offset) * Complex64::from_polar(1.0, -self.rotation) / self.spacing;
        let j = u.im / SQRT3_2;
        (u.re - 0.5 * j, j)
    }

    /// The site whose hexagonal face contains z.
    pub fn nearest_site(&self, z: Complex64) -> (i32, i32) {
        let (fi, fj) = self.frac_coords(z);
        let (bi, bj) = (fi.floor() as i32, fj.floor() as i32);
        let mut best = (bi, bj);
        let mut bd = f64::INFINITY;
        for di in -1..=2 {
            for dj in -1..=2 {
                let d = (self.site_pos(bi + di, bj + dj) - z).norm_sqr();
                if d < bd {
                    bd = d;
                    best = (bi + di, bj + dj);
                }
            }
        }
        best
    }

    /// Area of one hexagonal face.
    pub fn cell_area(&self) -> f64 {
        SQRT3_2 * self.spacing * self.spacing
    }

    pub fn triangle_vertices(i: i32, j: i32, up: bool) -> [(i32, i32); 3] {
        if up {
            [(i, j), (i + 1, j), (i, j + 1)]
        } else {
            [(i + 1, j), (i + 1, j + 1), (i, j + 1)]
        }
    }

    /// The six triangles incident to a site, as (i, j, up).
    pub fn incident_triangles(i: i32, j: i32) -> [(i32, i32, bool); 6] {
        [
            (i, j, true),
            (i - 1, j, true),
            (i, j - 1, true),
            (i - 1, j, false),
            (i - 1, j - 1, false),
            (i, j - 1, false),
        ]
    }
}

/// Rotation by π/3 about the site (0, 0), as an index permutation.
pub fn rotate_index(i: i32, j: i32) -> (i32, i32) {
    (-j, i + j)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_permutation_is_rotation_by_sixty_degrees() {
        let l = LatticeSpec::new(0.3).unwrap();
        let rot = Complex64::from_polar(1.0, std::f64::consts::PI / 3.0);
        for (i, j) in [(1, 0), (2, -3), (-4, 7)] {
            let (ri, rj) = rotate_index(i, j);
            assert!((l.site_pos(ri, rj) - rot * l.site_pos(i, j)).norm() < 1e-12);
        }
    }

    #[test]
    fn frac_coords_invert_site_positions() {
        let mut l = LatticeSpec::new(0.1).unwrap();
        l.offset = Complex64::new(0.013, -0.02);
        l.rotation = 0.3;
        for (i, j) in [(0, 0), (5, -2), (-7, 9)] {
            let (fi, fj) = l.frac_coords(l.site_pos(i, j));
            assert!((fi - i as f64).abs() < 1e-9 && (fj - j as f64).abs() < 1e-9);
            assert_eq!(l.nearest_site(l.site_pos(i, j) + 0.02), (i, j));
        }
    }

    #[test]
    fn triangles_tile_around_a_site() {
        for (ti, tj, up) in LatticeSpec::incident_triangles(3, -2) {
            assert!(LatticeSpec::triangle_vertices(ti, tj, up).contains(&(3, -2)));
        }
    }
}
