use crate::domains::{rasterize, DomainSpec, LatticeMask, NONE};
use crate::error::{Error, Result};
use crate::events::{EventSpec, Outcome, PreparedEvent};
use crate::lattice::LatticeSpec;

use super::{extract_loops, LoopConfig};

pub const MAX_EXACT_SITES: usize = 24;

fn energy(mask: &LatticeMask, spins: &[i8]) -> i64 {
    let mut e = 0i64;
    for b in &mask.bonds {
        let sc = if b[1] == NONE { 1 } else { spins[b[1] as usize] as i64 };
        e -= spins[b[0] as usize] as i64 * sc;
    }
    e
}

/// Sums Boltzmann weights over all 2^N configurations, calling `f` on each
/// with its relative weight.
fn for_each_config(mask: &LatticeMask, beta: f64, mut f: impl FnMut(&[i8], f64)) -> Result<f64> {
    let n = mask.len();
    if n > MAX_EXACT_SITES {
        return Err(Error::MaskTooLarge(n));
    }
    let e_min = -(mask.bonds.len() as i64);
    let mut spins = vec![1i8; n];
    let mut z = 0.0;
    for code in 0u64..(1u64 << n) {
        for (k, s) in spins.iter_mut().enumerate() {
            *s = if code >> k & 1 == 1 { -1 } else { 1 };
        }
        let e = energy(mask, &spins);
        let w = if beta == 0.0 { 1.0 } else { (-beta * (e - e_min) as f64).exp() };
        z += w;
        f(&spins, w);
    }
    Ok(z)
}

/// Exact probability of an arbitrary loop predicate. Discarded outcomes are
/// excluded from both numerator and denominator.
pub fn enumerate_exact_with(mask: &LatticeMask, beta: f64, pred: impl Fn(&LoopConfig) -> Outcome) -> Result<f64> {
    let mut hit = 0.0;
    let mut decided = 0.0;
    for_each_config(mask, beta, |spins, w| match pred(&extract_loops(spins, mask)) {
        Outcome::True => {
            hit += w;
            decided += w;
        }
        Outcome::False => decided += w,
        Outcome::Discarded => {}
    })?;
    if decided == 0.0 {
        return Err(Error::Estimation("event undecidable on every configuration".into()));
    }
    Ok(hit / decided)
}

/// Exact probability of `event` on an explicit mask.
pub fn enumerate_exact_mask(mask: &LatticeMask, event: &EventSpec, beta: f64) -> Result<f64> {
    let prepared = PreparedEvent::new(event, mask)?;
    enumerate_exact_with(mask, beta, |l| prepared.eval(l))
}

/// Exact probability of `event` at coupling β by summation over 2^N configurations.
pub fn enumerate_exact(d: &DomainSpec, lattice: &LatticeSpec, event: &EventSpec, beta: f64) -> Result<f64> {
    let mask = rasterize(d, lattice)?;
    enumerate_exact_mask(&mask, event, beta)
}

/// Exact mean of the energy density −(1/N)Σ s_i s_j.
pub fn exact_energy_density(mask: &LatticeMask, beta: f64) -> Result<f64> {
    let mut acc = 0.0;
    let z = for_each_config(mask, beta, |spins, w| acc += w * energy(mask, spins) as f64)?;
    Ok(acc / z / mask.len() as f64)
}
