//! Monte Carlo estimators: probabilities, renormalised probabilities over
//! co-scaled ε ladders, the stress-tensor insertion, relative partition
//! functions, the central charge, and the identity checks built on them.
//!
//! Every ratio is formed on a single sample stream where the identity being
//! tested allows it; independent streams are combined in quadrature.

mod central;
mod functionals;
mod point_split;
mod renorm;
mod stress;

pub use central::{
    central_charge, central_charge_of_kappa, charge_from_functional, inverted_ellipse_exterior, kappa_from_central_charge,
    one_point_via_relative_z, transformation_residual, CentralChargeReport, ChargeRouteSettings, CentralChargeSettings, OnePointReport, TransformationReport,
};
pub use functionals::{deform_domain, DerivativeSettings, ProbabilityFunctional, RelativeZFunctional};
pub use point_split::{point_split_object, PointSplitReport, PointSplitRow};
pub use renorm::{
    calibrate_normalization, covariance_factor, relative_partition, renormalized_prob, renormalized_prob_rotated,
    restriction_residual,
    NormRow, NormalizationTable, RestrictionReport, RestrictionRung,
};
pub use stress::{
    fourier_coefficient, fourier_coefficient_half, stress_insertion, ward_residual, StressInsertion, StressRung,
    StressSettings, ThetaSample, WardReport,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conformal::ComplexPoint;
use crate::domains::{boundary_components, rasterize, DomainSpec, PreparedDomain};
use crate::error::{Error, Result};
use crate::events::{supported_in, EventSpec, PreparedEvent};
use crate::lattice::LatticeSpec;
use crate::sampler::{run_chains, SamplerConfig};
use crate::stats::{Estimate, SampleTable};

/// Chains and samples drawn for one table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub sampler: SamplerConfig,
    pub chains: usize,
    pub samples_per_chain: usize,
}

impl McSettings {
    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        if self.chains == 0 || self.samples_per_chain < 2 {
            return Err(Error::Domain("need at least one chain and two samples per chain".into()));
        }
        Ok(())
    }

    /// Same settings with the seed replaced by a derived one.
    pub fn with_stream(&self, tag: u64) -> Self {
        let mut out = *self;
        out.sampler.seed = sub_seed(self.sampler.seed, tag);
        out
    }

    pub fn total_samples(&self) -> usize {
        self.chains * self.samples_per_chain
    }
}

/// SplitMix64 of (seed, tag): seeds for tables that must not share streams.
pub fn sub_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One ε value with the lattice resolution (sites per unit length) used for it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub eps: f64,
    pub resolution: u32,
}

impl Rung {
    pub fn lattice(&self) -> Result<LatticeSpec> {
        LatticeSpec::with_resolution(self.resolution)
    }
}

/// Relative tolerance on ε·L along a co-scaled ladder.
pub const CO_SCALE_TOL: f64 = 0.1;

/// An ε ladder, largest first, whose lattice spacing shrinks with ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ladder {
    pub rungs: Vec<Rung>,
}

impl Ladder {
    /// Resolutions L_k = round(l0·ε_0/ε_k).
    pub fn co_scaled(eps: &[f64], l0: u32) -> Result<Self> {
        let e0 = *eps.first().ok_or_else(|| Error::Domain("empty ε ladder".into()))?;
        let rungs = eps.iter().map(|&e| Rung { eps: e, resolution: (l0 as f64 * e0 / e).round().max(1.0) as u32 }).collect();
        let l = Ladder { rungs };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self.rungs.first().ok_or_else(|| Error::Domain("empty ε ladder".into()))?;
        let target = first.eps * first.resolution as f64;
        for (k, r) in self.rungs.iter().enumerate() {
            if !(r.eps > 0.0 && r.eps < 1.0) || r.resolution == 0 {
                return Err(Error::Domain(format!("bad rung ε = {}, L = {}", r.eps, r.resolution)));
            }
            if k > 0 && !(r.eps < self.rungs[k - 1].eps) {
                return Err(Error::Domain("ε ladder must be strictly decreasing".into()));
            }
            if ((r.eps * r.resolution as f64) / target - 1.0).abs() > CO_SCALE_TOL {
                return Err(Error::Domain(format!(
                    "ladder not co-scaled: ε·L = {} at rung {k}, {} at rung 0",
                    r.eps * r.resolution as f64,
                    target
                )));
            }
        }
        Ok(())
    }

    pub fn eps(&self) -> Vec<f64> {
        self.rungs.iter().map(|r| r.eps).collect()
    }
}

/// Indicator table of `events` on C: one column per event, NaN where the
/// event discarded the sample.
pub fn event_table(c: &DomainSpec, lattice: &LatticeSpec, events: &[EventSpec], mc: &McSettings) -> Result<SampleTable> {
    mc.validate()?;
    c.validate()?;
    let mask = rasterize(c, lattice)?;
    let prepared: Vec<PreparedEvent> = events.iter().map(|e| PreparedEvent::new(e, &mask)).collect::<Result<_>>()?;
    let rows = run_chains(&mask, &mc.sampler, mc.chains, mc.samples_per_chain, |_, lc| {
        prepared.iter().map(|p| p.eval(lc).indicator()).collect::<Vec<f64>>()
    })?;
    let chains = rows.into_iter().map(|c| c.into_iter().flatten().collect()).collect();
    Ok(SampleTable::new((0..events.len()).map(|k| format!("event{k}")).collect(), chains))
}

/// P(event)_C with a binning-corrected error.
pub fn estimate_prob(event: &EventSpec, c: &DomainSpec, lattice: &LatticeSpec, mc: &McSettings) -> Result<Estimate> {
    event.validate()?;
    if !supported_in(event, c)? {
        return Err(Error::Domain("event is not supported in the domain".into()));
    }
    event_table(c, lattice, std::slice::from_ref(event), mc)?.mean(0)
}

/// Quotient of independent estimates with first-order error propagation.
pub(crate) fn ratio_estimate(num: Estimate, den: Estimate) -> Result<Estimate> {
    if den.mean == 0.0 {
        return Err(Error::Estimation("denominator estimate is zero".into()));
    }
    let r = num.mean / den.mean;
    let rel = (num.std_err / num.mean).powi(2) + (den.std_err / den.mean).powi(2);
    let err = if num.mean == 0.0 { num.std_err / den.mean.abs() } else { r.abs() * rel.sqrt() };
    Ok(Estimate { mean: r, std_err: err, n_samples: num.n_samples.min(den.n_samples), autocorr_corrected: true })
}

/// Whether closure(inner) ⊂ outer, checked on boundary samples.
pub(crate) fn nested(inner: &DomainSpec, outer: &DomainSpec) -> Result<bool> {
    let po = PreparedDomain::new(outer)?;
    for c in boundary_components(inner, 256)? {
        if c.points.iter().any(|&z| !po.contains(ComplexPoint::Finite(z))) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether every support point of `e` lies in C and outside closure(A).
pub(crate) fn supported_between(e: &EventSpec, a: &DomainSpec, c: &DomainSpec) -> Result<bool> {
    let pc = PreparedDomain::new(c)?;
    let pa = PreparedDomain::new(a)?;
    e.support().within(|z| pc.contains(z) && !pa.contains(z) && !pa.on_boundary(z))
}

pub(crate) fn finite_point(w: ComplexPoint) -> Result<Complex64> {
    w.finite().ok_or_else(|| Error::Domain("point at infinity not allowed here".into()))
}

#[cfg(test)]
mod tests;
