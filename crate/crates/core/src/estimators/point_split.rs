use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{finite_point, McSettings};
use crate::conformal::ComplexPoint;
use crate::domains::{rasterize, DomainSpec, PreparedDomain};
use crate::error::{Error, Result};
use crate::events::pair_count;
use crate::lattice::LatticeSpec;
use crate::sampler::run_chains;
use crate::stats::{extrapolate, weighted_least_squares, EpsRow, Estimate, ExtrapolationResult, SampleTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointSplitRow {
    pub separation: f64,
    /// Mean number of loops surrounding both z₁ and z₂.
    pub pair_count: Estimate,
    /// k·n̄ − (c_sub/2)·log δ.
    pub value: Estimate,
    pub discarded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSplitReport {
    pub w: Complex64,
    pub k: f64,
    pub c_sub: f64,
    pub resolution: f64,
    pub rows: Vec<PointSplitRow>,
    /// δ → 0 fit of the subtracted value.
    pub plateau: ExtrapolationResult,
    /// Slope of k·n̄ against −log δ.
    pub log_slope: Estimate,
}

/// Loop counting at z₁,₂ = w ∓ δ/2 for each separation δ, all separations
/// measured on one sample stream.
pub fn point_split_object(
    w: ComplexPoint,
    separations: &[f64],
    k: f64,
    c_sub: f64,
    c: &DomainSpec,
    lattice: &LatticeSpec,
    mc: &McSettings,
) -> Result<PointSplitReport> {
    mc.validate()?;
    let w = finite_point(w)?;
    if separations.len() < 2 {
        return Err(Error::Domain("need at least two separations".into()));
    }
    if separations.iter().any(|d| !(*d > 0.0)) || separations.windows(2).any(|p| !(p[1] < p[0])) {
        return Err(Error::Domain("separations must be positive and strictly decreasing".into()));
    }
    let pc = PreparedDomain::new(c)?;
    let half = Complex64::new(separations[0] / 2.0, 0.0);
    if !pc.contains(ComplexPoint::Finite(w - half)) || !pc.contains(ComplexPoint::Finite(w + half)) {
        return Err(Error::Domain("split points leave C".into()));
    }
    let pairs: Vec<(ComplexPoint, ComplexPoint)> = separations
        .iter()
        .map(|&d| {
            let h = Complex64::new(d / 2.0, 0.0);
            (ComplexPoint::Finite(w - h), ComplexPoint::Finite(w + h))
        })
        .collect();
    let mask = rasterize(c, lattice)?;
    let rows = run_chains(&mask, &mc.sampler, mc.chains, mc.samples_per_chain, |_, lc| {
        pairs.iter().map(|(a, b)| pair_count(lc, *a, *b).map(|n| n as f64).unwrap_or(f64::NAN)).collect::<Vec<f64>>()
    })?;
    let chains = rows.into_iter().map(|c| c.into_iter().flatten().collect()).collect();
    let t = SampleTable::new(separations.iter().map(|d| format!("delta={d}")).collect(), chains);
    let mut out = Vec::with_capacity(separations.len());
    for (j, &d) in separations.iter().enumerate() {
        let n = t.mean(j)?;
        let sub = -(c_sub / 2.0) * d.ln();
        let value = if k == 0.0 {
            Estimate::exact(sub)
        } else {
            Estimate { mean: k * n.mean + sub, std_err: k.abs() * n.std_err, ..n }
        };
        out.push(PointSplitRow { separation: d, pair_count: n, value, discarded: t.discarded(j) });
    }
    let plateau = extrapolate(&out.iter().map(|r| EpsRow { eps: r.separation, value: r.value.mean, std_err: r.value.std_err }).collect::<Vec<_>>())?;
    let x: Vec<Vec<f64>> = separations.iter().map(|d| vec![1.0, -d.ln()]).collect();
    let y: Vec<f64> = out.iter().map(|r| k * r.pair_count.mean).collect();
    let s: Vec<f64> = out.iter().map(|r| k.abs() * r.pair_count.std_err).collect();
    let fit = weighted_least_squares(&x, &y, &s)?;
    let scale = if fit.dof > 0 { (fit.chi2 / fit.dof as f64).max(1.0) } else { 1.0 };
    let log_slope = Estimate {
        mean: fit.coef[1],
        std_err: (fit.cov[1][1] * scale).sqrt(),
        n_samples: t.rows(),
        autocorr_corrected: false,
    };
    Ok(PointSplitReport { w, k, c_sub, resolution: lattice.resolution(), rows: out, plateau, log_slope })
}
