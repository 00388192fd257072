use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{event_table, nested, ratio_estimate, supported_between, Ladder, McSettings, Rung};
use crate::conformal::{AnalyticMap, EllipseSpec};
use crate::domains::{boundary_components, DomainSpec};
use crate::error::{Error, Result};
use crate::events::EventSpec;
use crate::lattice::LatticeSpec;
use crate::stats::{extrapolate, EpsRow, Estimate, ExtrapolationResult};

/// Stream tags, so that tables of different roles never share seeds.
const TAG_DENOMINATOR: u64 = 1;
const TAG_REFERENCE: u64 = 2;
const TAG_NUMERATOR: u64 = 3;
const TAG_TARGET: u64 = 4;
const TAG_PROXY: u64 = 5;
const TAG_IMAGE: u64 = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub eps: f64,
    pub resolution: u32,
    /// P(ℰ(𝔻, ε, u_𝔻)) on the disk of radius 2.
    pub denominator: Estimate,
    /// P(ℰ(E(0,1,0), ε, u)) on the sphere proxy.
    pub reference: Estimate,
    pub ratio: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationTable {
    pub b: f64,
    pub proxy_radius: f64,
    pub rows: Vec<NormRow>,
    /// ε → 0 fit of reference/denominator.
    pub ratio_fit: ExtrapolationResult,
    /// 𝒩 = 1 / (fitted ratio at ε = 0).
    pub norm: Estimate,
}

impl NormalizationTable {
    pub fn ladder(&self) -> Ladder {
        Ladder { rungs: self.rows.iter().map(|r| Rung { eps: r.eps, resolution: r.resolution }).collect() }
    }

    pub fn proxy(&self) -> DomainSpec {
        DomainSpec::SphereProxy { radius: self.proxy_radius }
    }

    /// 𝒩 / P(ℰ(𝔻,ε,u_𝔻))_{2𝔻} at rung k.
    pub fn factor(&self, k: usize) -> Result<Estimate> {
        let row = self.rows.get(k).ok_or_else(|| Error::Domain(format!("no calibration rung {k}")))?;
        ratio_estimate(self.norm, row.denominator)
    }

    /// Rung index of a calibrated ε value.
    pub fn rung_of(&self, eps: f64) -> Result<usize> {
        self.rows
            .iter()
            .position(|r| (r.eps - eps).abs() <= 1e-12 * eps.max(1.0))
            .ok_or_else(|| Error::Domain(format!("ε = {eps} is not a calibrated rung")))
    }
}

/// Measures the reference denominators and fixes 𝒩 so that the
/// extrapolated renormalised probability of E(0,1,0) on the proxy is 1.
pub fn calibrate_normalization(b: f64, ladder: &Ladder, proxy_radius: f64, mc: &McSettings) -> Result<NormalizationTable> {
    ladder.validate()?;
    let reference = DomainSpec::ellipse(EllipseSpec::new(Complex64::new(0.0, 0.0), 1.0, 0.0, b)?);
    let proxy = DomainSpec::SphereProxy { radius: proxy_radius };
    proxy.validate()?;
    if !nested(&reference, &proxy)? {
        return Err(Error::Domain(format!("proxy radius {proxy_radius} does not contain the reference ellipse")));
    }
    let two_disk = DomainSpec::disk(Complex64::new(0.0, 0.0), 2.0);
    let mut rows = Vec::with_capacity(ladder.rungs.len());
    for (k, r) in ladder.rungs.iter().enumerate() {
        let lattice = r.lattice()?;
        let den_event = EventSpec::corridor(&DomainSpec::unit_disk(), r.eps)?;
        let ref_event = EventSpec::corridor(&reference, r.eps)?;
        let den = event_table(&two_disk, &lattice, &[den_event], &mc.with_stream(TAG_DENOMINATOR + 16 * k as u64))?.mean(0)?;
        let rf = event_table(&proxy, &lattice, &[ref_event], &mc.with_stream(TAG_REFERENCE + 16 * k as u64))?.mean(0)?;
        if !(den.mean > 0.0 && den.mean <= 1.0) {
            return Err(Error::Calibration(format!("denominator {} at ε = {} is not in (0, 1]", den.mean, r.eps)));
        }
        if let Some(prev) = rows.last().map(|p: &NormRow| p.denominator) {
            let tol = 2.0 * prev.std_err.hypot(den.std_err);
            if den.mean > prev.mean + tol {
                return Err(Error::Calibration(format!(
                    "denominators not decreasing: {} at ε = {} after {}",
                    den.mean, r.eps, prev.mean
                )));
            }
        }
        let ratio = ratio_estimate(rf, den)?;
        rows.push(NormRow { eps: r.eps, resolution: r.resolution, denominator: den, reference: rf, ratio });
    }
    let fit = extrapolate(&rows.iter().map(|r| EpsRow { eps: r.eps, value: r.ratio.mean, std_err: r.ratio.std_err }).collect::<Vec<_>>())?;
    if !(fit.value > 0.0) {
        return Err(Error::Calibration(format!("extrapolated reference ratio {} is not positive", fit.value)));
    }
    let norm = Estimate {
        mean: 1.0 / fit.value,
        std_err: fit.error / (fit.value * fit.value),
        n_samples: rows.iter().map(|r| r.reference.n_samples).sum(),
        autocorr_corrected: true,
    };
    Ok(NormalizationTable { b, proxy_radius, rows, ratio_fit: fit, norm })
}

fn check_renorm_inputs(x: &EventSpec, a: &DomainSpec, c: &DomainSpec) -> Result<()> {
    x.validate()?;
    a.validate()?;
    c.validate()?;
    if !nested(a, c)? {
        return Err(Error::Domain("closure(A) is not inside C".into()));
    }
    if !supported_between(x, a, c)? {
        return Err(Error::Domain("event support is not inside C ∖ closure(A)".into()));
    }
    Ok(())
}

/// P(X ∧ ℰ(A,ε,u_A))_C at every rung, from one table per rung.
fn joint_rows(
    x: &EventSpec,
    a: &DomainSpec,
    c: &DomainSpec,
    ladder: &Ladder,
    mc: &McSettings,
    tag: u64,
    rotation: f64,
) -> Result<Vec<Estimate>> {
    ladder
        .rungs
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let e = EventSpec::corridor(a, r.eps)?;
            let joint = if x.is_trivial() { e } else { x.clone().and(e) };
            let lattice = LatticeSpec { rotation, ..r.lattice()? };
            event_table(c, &lattice, &[joint], &mc.with_stream(tag + 16 * k as u64))?.mean(0)
        })
        .collect()
}

/// 𝒩·lim_{ε→0} P(X, ℰ(A,ε,u_A))_C / P(ℰ(𝔻,ε,u_𝔻))_{2𝔻} over the table's ladder.
pub fn renormalized_prob(
    x: &EventSpec,
    a: &DomainSpec,
    c: &DomainSpec,
    table: &NormalizationTable,
    mc: &McSettings,
) -> Result<ExtrapolationResult> {
    renormalized_prob_rotated(x, a, c, table, mc, 0.0)
}

/// The same estimate with every lattice of the numerator ladder rotated by
/// `rotation` about the origin.
pub fn renormalized_prob_rotated(
    x: &EventSpec,
    a: &DomainSpec,
    c: &DomainSpec,
    table: &NormalizationTable,
    mc: &McSettings,
    rotation: f64,
) -> Result<ExtrapolationResult> {
    check_renorm_inputs(x, a, c)?;
    let ladder = table.ladder();
    let joint = joint_rows(x, a, c, &ladder, mc, TAG_NUMERATOR, rotation)?;
    let rows: Vec<EpsRow> = joint
        .iter()
        .enumerate()
        .map(|(k, j)| {
            let f = table.factor(k)?;
            let v = f.mean * j.mean;
            let err = (f.std_err * j.mean).hypot(f.mean * j.std_err);
            Ok(EpsRow { eps: ladder.rungs[k].eps, value: v, std_err: err })
        })
        .collect::<Result<_>>()?;
    extrapolate(&rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictionRung {
    pub eps: f64,
    pub resolution: u32,
    pub joint_count: u64,
    pub corridor_count: u64,
    /// count(X ∧ ℰ) / count(ℰ).
    pub prelimit_ratio: f64,
    /// Fraction of X among the samples where ℰ holds.
    pub conditional: f64,
    /// Jackknife estimate of P(X ∧ ℰ)/P(ℰ).
    pub ratio: Estimate,
    /// P(X) on C ∖ closure(A) at this resolution.
    pub target: Estimate,
    pub residual: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictionReport {
    pub rungs: Vec<RestrictionRung>,
    /// ε → 0 fit of the per-rung residuals.
    pub residual_fit: ExtrapolationResult,
    pub residual: Estimate,
    /// Whether |residual| decreases along the ladder.
    pub shrinking: bool,
}

/// P^ren(X;A)_C / P^ren(A)_C − P(X)_{C∖Ā}. 𝒩 and the reference denominators
/// cancel in the ratio, which is formed on one stream per rung.
pub fn restriction_residual(
    x: &EventSpec,
    a: &DomainSpec,
    c: &DomainSpec,
    table: &NormalizationTable,
    mc: &McSettings,
) -> Result<RestrictionReport> {
    check_renorm_inputs(x, a, c)?;
    let ladder = table.ladder();
    let annulus = c.clone().minus(a.clone());
    let mut rungs = Vec::with_capacity(ladder.rungs.len());
    for (k, r) in ladder.rungs.iter().enumerate() {
        let lattice = r.lattice()?;
        let e = EventSpec::corridor(a, r.eps)?;
        let t = event_table(c, &lattice, &[x.clone().and(e.clone()), e], &mc.with_stream(TAG_NUMERATOR + 16 * k as u64))?;
        let (mut jc, mut ec, mut cond_num, mut cond_den) = (0u64, 0u64, 0u64, 0u64);
        for chain in &t.chains {
            for row in chain.chunks_exact(2) {
                if row[0].is_nan() {
                    continue;
                }
                jc += row[0] as u64;
                ec += row[1] as u64;
                if row[1] == 1.0 {
                    cond_den += 1;
                    if row[0] == 1.0 {
                        cond_num += 1;
                    }
                }
            }
        }
        if ec == 0 {
            return Err(Error::Estimation(format!("no sample satisfies the corridor event at ε = {}", r.eps)));
        }
        let ratio = t.jackknife(|m| m[0] / m[1])?;
        let target = event_table(&annulus, &lattice, std::slice::from_ref(x), &mc.with_stream(TAG_TARGET + 16 * k as u64))?.mean(0)?;
        let residual = Estimate {
            mean: ratio.mean - target.mean,
            std_err: ratio.std_err.hypot(target.std_err),
            n_samples: ratio.n_samples.min(target.n_samples),
            autocorr_corrected: true,
        };
        rungs.push(RestrictionRung {
            eps: r.eps,
            resolution: r.resolution,
            joint_count: jc,
            corridor_count: ec,
            prelimit_ratio: jc as f64 / ec as f64,
            conditional: cond_num as f64 / cond_den as f64,
            ratio,
            target,
            residual,
        });
    }
    let fit = extrapolate(
        &rungs.iter().map(|r| EpsRow { eps: r.eps, value: r.residual.mean, std_err: r.residual.std_err }).collect::<Vec<_>>(),
    )?;
    let shrinking = rungs.windows(2).all(|w| w[1].residual.mean.abs() <= w[0].residual.mean.abs() + w[1].residual.std_err);
    Ok(RestrictionReport { residual: fit.estimate(), residual_fit: fit, rungs, shrinking })
}

/// g(D) as a domain spec: Möbius images stay exact, maps conformal on a
/// simply connected D compose with its canonical map, others transport ∂D.
pub(crate) fn image_domain(d: &DomainSpec, g: &AnalyticMap) -> Result<DomainSpec> {
    Ok(match g {
        AnalyticMap::Identity => d.clone(),
        AnalyticMap::Mobius(m) => d.clone().mobius_image(*m),
        _ => {
            check_conformal_on(g, d)?;
            if d.is_simply_connected_family() {
                DomainSpec::AnalyticImage { map: crate::domains::canonical_disk_map(d)?.then(g.clone()) }
            } else {
                d.clone().mapped(g.clone())
            }
        }
    })
}

fn check_conformal_on(g: &AnalyticMap, d: &DomainSpec) -> Result<()> {
    for c in boundary_components(d, 256)? {
        if c.points.iter().any(|&z| !g.is_conformal_at(z)) {
            return Err(Error::Domain("map is not conformal on the domain boundary".into()));
        }
    }
    Ok(())
}

/// f(g, A) = P^ren(g(A))_{g(C)} / P^ren(A)_C.
pub fn covariance_factor(
    g: &AnalyticMap,
    a: &DomainSpec,
    c: &DomainSpec,
    table: &NormalizationTable,
    mc: &McSettings,
) -> Result<Estimate> {
    let base = renormalized_prob(&EventSpec::Trivial, a, c, table, mc)?;
    let image = renormalized_prob(&EventSpec::Trivial, &image_domain(a, g)?, &image_domain(c, g)?, table, &mc.with_stream(TAG_IMAGE))?;
    ratio_estimate(image.estimate(), base.estimate())
}

/// Z(C|D) = lim P(ℰ(D,ε,u_D))_proxy / P(ℰ(D,ε,u_D))_C.
pub fn relative_partition(c: &DomainSpec, d: &DomainSpec, table: &NormalizationTable, mc: &McSettings) -> Result<ExtrapolationResult> {
    c.validate()?;
    d.validate()?;
    if !nested(d, c)? {
        return Err(Error::Domain("closure(D) is not inside C".into()));
    }
    let proxy = table.proxy();
    if !nested(c, &proxy)? {
        return Err(Error::Domain("C does not fit in the sphere proxy".into()));
    }
    let ladder = table.ladder();
    let mut rows = Vec::with_capacity(ladder.rungs.len());
    for (k, r) in ladder.rungs.iter().enumerate() {
        let lattice = r.lattice()?;
        let e = EventSpec::corridor(d, r.eps)?;
        let num = event_table(&proxy, &lattice, std::slice::from_ref(&e), &mc.with_stream(TAG_PROXY + 16 * k as u64))?.mean(0)?;
        let den = event_table(c, &lattice, &[e], &mc.with_stream(TAG_NUMERATOR + 16 * k as u64))?.mean(0)?;
        let q = ratio_estimate(num, den)?;
        rows.push(EpsRow { eps: r.eps, value: q.mean, std_err: q.std_err });
    }
    extrapolate(&rows)
}
