use std::collections::{HashMap, VecDeque};

use num_complex::Complex64;

use super::{boundary_components, DomainSpec, PreparedDomain};
use crate::conformal::ComplexPoint;
use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::lattice::{LatticeSpec, NEIGHBOURS};

/// Marker for "outside the mask" (a fixed +1 ghost site) or a missing bond.
pub const NONE: u32 = u32::MAX;

/// Sites of a domain on a lattice, with the bond/triangle structure of the
/// honeycomb dual needed for loop extraction.
#[derive(Debug, Clone)]
pub struct LatticeMask {
    pub lattice: LatticeSpec,
    pub sites: Vec<(i32, i32)>,
    pub pos: Vec<Complex64>,
    /// Neighbours in [`NEIGHBOURS`] order; [`NONE`] for ghost sites.
    pub neighbours: Vec<[u32; 6]>,
    pub is_boundary: Vec<bool>,
    pub boundary_sites: Vec<u32>,
    /// Bonds with at least one mask endpoint: (site, site-or-NONE).
    pub bonds: Vec<[u32; 2]>,
    pub bond_mid: Vec<Complex64>,
    /// The two triangles sharing each bond.
    pub bond_tris: Vec<[u32; 2]>,
    /// Triangles with at least one mask vertex: three bonds each (NONE for ghost–ghost).
    pub tri_bonds: Vec<[u32; 3]>,
    pub tri_key: Vec<(i32, i32, bool)>,
    lookup: HashMap<(i32, i32), u32>,
    tri_lookup: HashMap<(i32, i32, bool), u32>,
}

impl LatticeMask {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn site_index(&self, i: i32, j: i32) -> Option<u32> {
        self.lookup.get(&(i, j)).copied()
    }

    pub fn triangle_index(&self, i: i32, j: i32, up: bool) -> Option<u32> {
        self.tri_lookup.get(&(i, j, up)).copied()
    }

    /// Mask built from an explicit site list.
    pub fn from_sites(lattice: LatticeSpec, mut sites: Vec<(i32, i32)>) -> Self {
        sites.sort_by_key(|&(i, j)| (j, i));
        sites.dedup();
        let lookup: HashMap<(i32, i32), u32> = sites.iter().enumerate().map(|(k, &s)| (s, k as u32)).collect();
        let pos = sites.iter().map(|&(i, j)| lattice.site_pos(i, j)).collect();
        let neighbours: Vec<[u32; 6]> = sites
            .iter()
            .map(|&(i, j)| {
                let mut nb = [NONE; 6];
                for (k, (di, dj)) in NEIGHBOURS.iter().enumerate() {
                    nb[k] = lookup.get(&(i + di, j + dj)).copied().unwrap_or(NONE);
                }
                nb
            })
            .collect();
        let is_boundary: Vec<bool> = neighbours.iter().map(|nb| nb.contains(&NONE)).collect();
        let boundary_sites = (0..sites.len() as u32).filter(|&k| is_boundary[k as usize]).collect();

        let mut tri_lookup = HashMap::new();
        let mut tri_key = Vec::new();
        for &(i, j) in &sites {
            for t in LatticeSpec::incident_triangles(i, j) {
                tri_lookup.entry(t).or_insert_with(|| {
                    tri_key.push(t);
                    (tri_key.len() - 1) as u32
                });
            }
        }
        let mut bond_lookup: HashMap<((i32, i32), (i32, i32)), u32> = HashMap::new();
        let mut bonds = Vec::new();
        let mut bond_mid = Vec::new();
        let mut bond_tris: Vec<[u32; 2]> = Vec::new();
        let mut tri_bonds = vec![[NONE; 3]; tri_key.len()];
        for (t, &(ti, tj, up)) in tri_key.iter().enumerate() {
            let v = LatticeSpec::triangle_vertices(ti, tj, up);
            for (k, (p, q)) in [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])].into_iter().enumerate() {
                let (ip, iq) = (lookup.get(&p).copied(), lookup.get(&q).copied());
                if ip.is_none() && iq.is_none() {
                    continue;
                }
                let key = if p < q { (p, q) } else { (q, p) };
                let b = *bond_lookup.entry(key).or_insert_with(|| {
                    let (a, c) = match (ip, iq) {
                        (Some(a), Some(c)) => (a, c),
                        (Some(a), None) => (a, NONE),
                        (None, Some(c)) => (c, NONE),
                        _ => unreachable!(),
                    };
                    bonds.push([a, c]);
                    bond_mid.push(0.5 * (lattice.site_pos(p.0, p.1) + lattice.site_pos(q.0, q.1)));
                    bond_tris.push([NONE, NONE]);
                    (bonds.len() - 1) as u32
                });
                let slot = &mut bond_tris[b as usize];
                if slot[0] == NONE {
                    slot[0] = t as u32;
                } else {
                    slot[1] = t as u32;
                }
                tri_bonds[t][k] = b;
            }
        }
        LatticeMask {
            lattice,
            sites,
            pos,
            neighbours,
            is_boundary,
            boundary_sites,
            bonds,
            bond_mid,
            bond_tris,
            tri_bonds,
            tri_key,
            lookup,
            tri_lookup,
        }
    }

    /// Edge-connectedness of the site set.
    pub fn is_connected(&self) -> bool {
        if self.sites.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.len()];
        let mut q = VecDeque::from([0u32]);
        seen[0] = true;
        let mut count = 1;
        while let Some(s) = q.pop_front() {
            for &n in &self.neighbours[s as usize] {
                if n != NONE && !seen[n as usize] {
                    seen[n as usize] = true;
                    count += 1;
                    q.push_back(n);
                }
            }
        }
        count == self.len()
    }

    /// Largest graph distance from a site to the mask exterior.
    pub fn depth(&self) -> usize {
        let mut dist = vec![usize::MAX; self.len()];
        let mut q = VecDeque::new();
        for &b in &self.boundary_sites {
            dist[b as usize] = 1;
            q.push_back(b);
        }
        let mut best = 0;
        while let Some(s) = q.pop_front() {
            best = best.max(dist[s as usize]);
            for &n in &self.neighbours[s as usize] {
                if n != NONE && dist[n as usize] == usize::MAX {
                    dist[n as usize] = dist[s as usize] + 1;
                    q.push_back(n);
                }
            }
        }
        best
    }

    /// Site index of the hexagonal face containing z, if in the mask.
    pub fn site_at(&self, z: Complex64) -> Option<u32> {
        let (i, j) = self.lattice.nearest_site(z);
        self.site_index(i, j)
    }
}

/// Sites whose centres lie in d.
pub fn rasterize(d: &DomainSpec, lattice: &LatticeSpec) -> Result<LatticeMask> {
    let prepared = PreparedDomain::new(d)?;
    let comps = boundary_components(d, 1024)?;
    if comps.iter().any(|c| !c.ccw) && !comps.iter().any(|c| c.ccw) {
        return Err(Error::Domain("cannot rasterize an unbounded domain".into()));
    }
    let mut bbox = BBox::of(&comps.iter().filter(|c| c.ccw).flat_map(|c| c.points.clone()).collect::<Vec<_>>());
    let pad = 0.01 * (bbox.max - bbox.min).norm() + 2.0 * lattice.spacing;
    bbox.min -= Complex64::new(pad, pad);
    bbox.max += Complex64::new(pad, pad);
    let corners = [bbox.min, bbox.max, Complex64::new(bbox.min.re, bbox.max.im), Complex64::new(bbox.max.re, bbox.min.im)];
    let (mut imin, mut imax, mut jmin, mut jmax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for c in corners {
        let (fi, fj) = lattice.frac_coords(c);
        imin = imin.min(fi);
        imax = imax.max(fi);
        jmin = jmin.min(fj);
        jmax = jmax.max(fj);
    }
    let (i0, i1, j0, j1) = (imin.floor() as i32 - 1, imax.ceil() as i32 + 1, jmin.floor() as i32 - 1, jmax.ceil() as i32 + 1);
    let count = (i1 - i0 + 1) as f64 * (j1 - j0 + 1) as f64;
    if count > 5e8 {
        return Err(Error::Domain(format!("bounding box holds {count:.0} candidate sites")));
    }
    let mut sites = Vec::new();
    for j in j0..=j1 {
        for i in i0..=i1 {
            let z = lattice.site_pos(i, j);
            if bbox.contains(z, 0.0) && prepared.contains(ComplexPoint::Finite(z)) {
                sites.push((i, j));
            }
        }
    }
    if sites.is_empty() {
        return Err(Error::DomainTooSmall("no lattice site inside the domain".into()));
    }
    let mask = LatticeMask::from_sites(*lattice, sites);
    if mask.depth() < 2 {
        return Err(Error::DomainTooSmall(format!(
            "spacing {} leaves no interior site",
            lattice.spacing
        )));
    }
    if !mask.is_connected() {
        return Err(Error::DomainTooSmall("mask is not edge-connected at this spacing".into()));
    }
    Ok(mask)
}
