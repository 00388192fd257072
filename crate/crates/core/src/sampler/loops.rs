use std::collections::VecDeque;

use num_complex::Complex64;

use crate::domains::{LatticeMask, NONE};
use crate::geometry::{signed_area, BBox};

/// A closed domain wall through bond midpoints, counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Loop {
    pub points: Vec<Complex64>,
    /// Triangle id containing segment k (from point k to point k+1).
    pub cells: Vec<u32>,
    pub bbox: BBox,
    /// Number of loops enclosing this one.
    pub depth: u32,
}

impl Loop {
    pub fn from_points(points: Vec<Complex64>) -> Self {
        let bbox = BBox::of(&points);
        Loop { cells: Vec::new(), points, bbox, depth: 0 }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoopConfig {
    pub loops: Vec<Loop>,
}

impl LoopConfig {
    pub fn total_length(&self) -> usize {
        self.loops.iter().map(|l| l.len()).sum()
    }
}

#[inline]
fn spin(spins: &[i8], s: u32) -> i8 {
    if s == NONE {
        1
    } else {
        spins[s as usize]
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        parent[x as usize] = parent[parent[x as usize] as usize];
        x = parent[x as usize];
    }
    x
}

/// All closed domain walls of a spin configuration.
pub fn extract_loops(spins: &[i8], mask: &LatticeMask) -> LoopConfig {
    let nb = mask.bonds.len();
    let wall: Vec<bool> = mask.bonds.iter().map(|b| spin(spins, b[0]) != spin(spins, b[1])).collect();
    let mut visited = vec![false; nb];
    let mut loops = Vec::new();
    let mut first_bond = Vec::new();
    for start in 0..nb {
        if !wall[start] || visited[start] {
            continue;
        }
        let mut points = Vec::new();
        let mut cells = Vec::new();
        let mut b = start as u32;
        let mut t = mask.bond_tris[start][0];
        loop {
            visited[b as usize] = true;
            points.push(mask.bond_mid[b as usize]);
            cells.push(t);
            let next = mask.tri_bonds[t as usize]
                .iter()
                .copied()
                .find(|&x| x != NONE && x != b && wall[x as usize])
                .expect("triangle with a single wall bond");
            let tris = mask.bond_tris[next as usize];
            t = if tris[0] == t { tris[1] } else { tris[0] };
            b = next;
            if b as usize == start {
                break;
            }
        }
        if signed_area(&points) < 0.0 {
            let n = points.len();
            points.reverse();
            let mut rc = Vec::with_capacity(n);
            for k in 0..n - 1 {
                rc.push(cells[n - 2 - k]);
            }
            rc.push(cells[n - 1]);
            cells = rc;
        }
        let bbox = BBox::of(&points);
        loops.push(Loop { points, cells, bbox, depth: 0 });
        first_bond.push(start);
    }
    if !loops.is_empty() {
        assign_depths(spins, mask, &mut loops, &first_bond);
    }
    LoopConfig { loops }
}

/// Depth from the tree of same-spin clusters, rooted at the exterior.
fn assign_depths(spins: &[i8], mask: &LatticeMask, loops: &mut [Loop], first_bond: &[usize]) {
    let n = mask.len();
    let ghost = n as u32;
    let mut parent: Vec<u32> = (0..=n as u32).collect();
    for (i, nbs) in mask.neighbours.iter().enumerate() {
        for &j in nbs {
            if spin(spins, j) == spins[i] {
                let (a, b) = (find(&mut parent, i as u32), find(&mut parent, if j == NONE { ghost } else { j }));
                if a != b {
                    parent[a as usize] = b;
                }
            }
        }
    }
    let sides: Vec<(u32, u32)> = first_bond
        .iter()
        .map(|&b| {
            let [x, y] = mask.bonds[b];
            (find(&mut parent, x), find(&mut parent, if y == NONE { ghost } else { y }))
        })
        .collect();
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n + 1];
    for &(a, b) in &sides {
        adj[a as usize].push(b);
        adj[b as usize].push(a);
    }
    let root = find(&mut parent, ghost);
    let mut depth = vec![u32::MAX; n + 1];
    depth[root as usize] = 0;
    let mut q = VecDeque::from([root]);
    while let Some(c) = q.pop_front() {
        for &d in &adj[c as usize] {
            if depth[d as usize] == u32::MAX {
                depth[d as usize] = depth[c as usize] + 1;
                q.push_back(d);
            }
        }
    }
    for (l, &(a, b)) in loops.iter_mut().zip(&sides) {
        l.depth = depth[a as usize].min(depth[b as usize]);
    }
}
