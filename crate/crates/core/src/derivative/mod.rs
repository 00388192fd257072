//! Conformal derivatives of boundary functionals: central differences along
//! id + ηh with Richardson extrapolation in η, the spin-2 Fourier mode over
//! the pole fields h_{w,θ}, contour quadrature and charge extraction.

mod charge;
mod contour;
mod functionals;

pub use charge::{charge_fit, fit_window, ChargeFit, DeltaSample, MIN_DECADES};
pub use contour::{circle_points, contour_integral, contour_integral_fn, laurent_coefficient, spectral_tangent};
pub use functionals::{
    ellipse_exterior_schwarzian, AreaFunctional, ContourFunctional, HalfPlanePointFunctional, LogFunctional,
    PointFunctional, WindingFunctional,
};

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::{AnalyticMap, DirectionField};
use crate::error::{Error, Result};
use crate::stats::{ComplexEstimate, Estimate, SampleTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalKind {
    ClosedForm,
    MonteCarlo,
}

/// Value of a functional at one deformation. Monte Carlo functionals also
/// return their per-sample table; `value` is then `reduce` of its means.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub table: Option<SampleTable>,
}

impl Evaluation {
    pub fn exact(value: f64) -> Self {
        Evaluation { value, table: None }
    }
}

/// F(Σ) for a fixed base configuration Σ (curves, marked points, domains);
/// `eval(g)` returns F(g(Σ)).
pub trait BoundaryFunctional: Sync {
    fn kind(&self) -> FunctionalKind;

    /// Deterministic in (g, seed). Monte Carlo functionals use `seed` for
    /// every chain they run, so that evaluations at different g share their
    /// random numbers.
    fn eval(&self, g: &AnalyticMap, seed: Option<u64>) -> Result<Evaluation>;

    /// Maps the column means of a sample table to the functional value.
    fn reduce(&self, means: &[f64]) -> f64 {
        means[0]
    }

    /// Points of Σ where the deformation must remain conformal.
    fn probe_points(&self) -> Vec<Complex64>;
}

/// η ladders used when none is given.
pub const MC_LADDER: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
pub const CLOSED_FORM_LADDER: [f64; 4] = [1e-4, 1e-5, 1e-6, 1e-7];
pub const DEFAULT_N_THETA: usize = 16;
/// Largest |η h'| accepted on the probe points.
pub const MAX_STRAIN: f64 = 0.5;

pub fn default_ladder(kind: FunctionalKind) -> Vec<f64> {
    match kind {
        FunctionalKind::ClosedForm => CLOSED_FORM_LADDER.to_vec(),
        FunctionalKind::MonteCarlo => MC_LADDER.to_vec(),
    }
}

/// Weights c_k with Σ c_k D(η_k) the polynomial extrapolation in η² to η = 0.
pub fn richardson_weights(etas: &[f64]) -> Vec<f64> {
    let x: Vec<f64> = etas.iter().map(|e| e * e).collect();
    (0..x.len())
        .map(|k| (0..x.len()).filter(|&j| j != k).map(|j| x[j] / (x[j] - x[k])).product())
        .collect()
}

fn richardson(etas: &[f64], d: &[f64]) -> f64 {
    richardson_weights(etas).iter().zip(d).map(|(c, v)| c * v).sum()
}

/// Ladder entries, largest first, that keep id ± ηh conformal on the probe
/// points; the rest are returned separately.
fn admissible(ladder: &[f64], fields: &[DirectionField], probes: &[Complex64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if ladder.is_empty() || ladder.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::Domain("η ladder must be nonempty and positive".into()));
    }
    let mut sorted = ladder.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted.dedup();
    let mut strain: f64 = 0.0;
    for h in fields {
        for &p in probes {
            let t = h.taylor(p).map_err(|_| Error::Domain(format!("direction field singular at {p}")))?;
            strain = strain.max(t[1].norm());
        }
    }
    let (keep, drop): (Vec<f64>, Vec<f64>) = sorted.into_iter().partition(|e| e * strain <= MAX_STRAIN);
    if keep.is_empty() {
        return Err(Error::Domain(format!("no η in the ladder keeps the deformation conformal (max |h'| = {strain})")));
    }
    Ok((keep, drop))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalDerivative {
    pub value: f64,
    pub error: f64,
    pub kind: FunctionalKind,
    /// η values used, largest first.
    pub ladder: Vec<f64>,
    /// η values dropped because id + ηh was not conformal on Σ.
    pub truncated: Vec<f64>,
    /// Central differences per η.
    pub differences: Vec<f64>,
    pub n_samples: usize,
}

impl DirectionalDerivative {
    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.value,
            std_err: self.error,
            n_samples: self.n_samples,
            autocorr_corrected: self.kind == FunctionalKind::MonteCarlo,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierModeDerivative {
    pub w: Complex64,
    pub estimate: ComplexEstimate,
    pub kind: FunctionalKind,
    pub n_theta: usize,
    pub ladder: Vec<f64>,
    pub truncated: Vec<f64>,
    /// (θ, Richardson-extrapolated ∇_{h_{w,θ}}F) for all n_theta angles.
    pub spectrum: Vec<(f64, f64)>,
}

fn perturbation(eta: f64, h: &DirectionField) -> AnalyticMap {
    AnalyticMap::perturbation(Complex64::new(eta, 0.0), h.clone())
}

/// Columns of several tables side by side; the tables must have the same
/// chain and row structure.
fn stack_tables(tables: &[&SampleTable]) -> Result<SampleTable> {
    let first = tables.first().ok_or_else(|| Error::Estimation("no tables".into()))?;
    let shape: Vec<usize> = first.chains.iter().map(|c| c.len() / first.ncols()).collect();
    let mut columns = Vec::new();
    for (k, t) in tables.iter().enumerate() {
        let s: Vec<usize> = t.chains.iter().map(|c| c.len() / t.ncols()).collect();
        if s != shape {
            return Err(Error::Estimation("perturbed evaluations have different sample shapes".into()));
        }
        columns.extend(t.columns.iter().map(|c| format!("{k}:{c}")));
    }
    let mut chains = Vec::with_capacity(shape.len());
    for (c, &rows) in shape.iter().enumerate() {
        let mut out = Vec::with_capacity(rows * columns.len());
        for r in 0..rows {
            for t in tables {
                let nc = t.ncols();
                out.extend_from_slice(&t.chains[c][r * nc..(r + 1) * nc]);
            }
        }
        chains.push(out);
    }
    Ok(SampleTable::new(columns, chains))
}

/// Evaluates F at id ± ηh for every (field, η) pair; results are ordered
/// field-major, then η, then sign (+ first).
fn evaluate_grid<F: BoundaryFunctional + ?Sized>(
    f: &F,
    fields: &[DirectionField],
    ladder: &[f64],
    seed: Option<u64>,
) -> Result<Vec<Evaluation>> {
    if f.kind() == FunctionalKind::MonteCarlo && seed.is_none() {
        return Err(Error::Domain("Monte Carlo functionals need a shared seed (common random numbers)".into()));
    }
    let jobs: Vec<AnalyticMap> = fields
        .iter()
        .flat_map(|h| ladder.iter().flat_map(move |&e| [perturbation(e, h), perturbation(-e, h)]))
        .collect();
    jobs.par_iter().map(|g| f.eval(g, seed)).collect()
}

/// Applies `combine` to the per-evaluation values, either directly or
/// inside a jackknife over the paired sample table.
fn combine_evaluations<F: BoundaryFunctional + ?Sized>(
    f: &F,
    evals: &[Evaluation],
    combine: impl Fn(&[f64]) -> Complex64,
) -> Result<ComplexEstimate> {
    match f.kind() {
        FunctionalKind::ClosedForm => {
            let v: Vec<f64> = evals.iter().map(|e| e.value).collect();
            Ok(ComplexEstimate::from_cov(combine(&v), [[0.0; 2]; 2], 0))
        }
        FunctionalKind::MonteCarlo => {
            let tables: Vec<&SampleTable> = evals
                .iter()
                .map(|e| e.table.as_ref().ok_or_else(|| Error::Estimation("Monte Carlo evaluation without samples".into())))
                .collect::<Result<_>>()?;
            let m = tables[0].ncols();
            if tables.iter().any(|t| t.ncols() != m) {
                return Err(Error::Estimation("perturbed evaluations have different columns".into()));
            }
            let stacked = stack_tables(&tables)?;
            let n = stacked.rows();
            let mut est = stacked.jackknife_complex(|means| {
                let v: Vec<f64> = means.chunks(m).map(|c| f.reduce(c)).collect();
                combine(&v)
            })?;
            est.n_samples = n;
            Ok(est)
        }
    }
}

/// ∇_h F(Σ) by central differences over the η ladder, Richardson-extrapolated
/// in η². Closed-form error: change from dropping the smallest η. Monte Carlo
/// error: block jackknife over the paired samples.
pub fn directional_derivative<F: BoundaryFunctional + ?Sized>(
    f: &F,
    h: &DirectionField,
    ladder: &[f64],
    seed: Option<u64>,
) -> Result<DirectionalDerivative> {
    let (ladder, truncated) = admissible(ladder, std::slice::from_ref(h), &f.probe_points())?;
    let evals = evaluate_grid(f, std::slice::from_ref(h), &ladder, seed)?;
    let diffs = |v: &[f64]| -> Vec<f64> { ladder.iter().enumerate().map(|(k, e)| (v[2 * k] - v[2 * k + 1]) / (2.0 * e)).collect() };
    let est = combine_evaluations(f, &evals, |v| Complex64::new(richardson(&ladder, &diffs(v)), 0.0))?;
    let values: Vec<f64> = evals.iter().map(|e| e.value).collect();
    let d = diffs(&values);
    let error = match f.kind() {
        FunctionalKind::MonteCarlo => est.std_err.re,
        FunctionalKind::ClosedForm => closed_form_error(&ladder, &d),
    };
    Ok(DirectionalDerivative {
        value: est.mean.re,
        error,
        kind: f.kind(),
        ladder,
        truncated,
        differences: d,
        n_samples: est.n_samples,
    })
}

fn closed_form_error(ladder: &[f64], d: &[f64]) -> f64 {
    let n = ladder.len();
    if n < 2 {
        return 0.0;
    }
    (richardson(ladder, d) - richardson(&ladder[..n - 1], &d[..n - 1])).abs()
}

/// Δ_w F(Σ) = ∫ dθ/2π e^{−iθ} ∇_{h_{w,θ}} F on n_theta equispaced angles.
/// h_{w,θ+π} = −h_{w,θ}, so only the first half of the angles is evaluated
/// and ∇ at θ+π is the negated difference of the same two evaluations.
pub fn fourier_mode_derivative<F: BoundaryFunctional + ?Sized>(
    f: &F,
    w: Complex64,
    n_theta: usize,
    ladder: &[f64],
    seed: Option<u64>,
) -> Result<FourierModeDerivative> {
    if n_theta < 4 || n_theta % 2 != 0 {
        return Err(Error::Domain(format!("n_theta = {n_theta} must be even and at least 4")));
    }
    let probes = f.probe_points();
    if probes.iter().any(|p| (p - w).norm() == 0.0) {
        return Err(Error::Domain("w lies on the differentiation set".into()));
    }
    let half = n_theta / 2;
    let thetas: Vec<f64> = (0..n_theta).map(|k| 2.0 * PI * k as f64 / n_theta as f64).collect();
    let fields: Vec<DirectionField> = thetas[..half].iter().map(|&t| DirectionField::pole(w, t)).collect();
    let (ladder, truncated) = admissible(ladder, &fields, &probes)?;
    let evals = evaluate_grid(f, &fields, &ladder, seed)?;
    let nl = ladder.len();
    let weights = richardson_weights(&ladder);
    let per_angle = |v: &[f64]| -> Vec<f64> {
        (0..half)
            .map(|a| {
                (0..nl)
                    .map(|k| {
                        let i = 2 * (a * nl + k);
                        weights[k] * (v[i] - v[i + 1]) / (2.0 * ladder[k])
                    })
                    .sum()
            })
            .collect()
    };
    let mode = |v: &[f64]| -> Complex64 {
        let d = per_angle(v);
        let s: Complex64 = d.iter().zip(&thetas).map(|(x, &t)| Complex64::from_polar(*x, -t)).sum();
        s * 2.0 / n_theta as f64
    };
    let mut estimate = combine_evaluations(f, &evals, mode)?;
    let values: Vec<f64> = evals.iter().map(|e| e.value).collect();
    let d = per_angle(&values);
    let mut spectrum: Vec<(f64, f64)> = thetas[..half].iter().cloned().zip(d.iter().cloned()).collect();
    spectrum.extend(thetas[half..].iter().cloned().zip(d.iter().map(|x| -x)));
    if f.kind() == FunctionalKind::ClosedForm && nl > 1 {
        // Truncation error of the Richardson table, per component.
        let coarse: Vec<f64> = {
            let w2 = richardson_weights(&ladder[..nl - 1]);
            (0..half)
                .map(|a| (0..nl - 1).map(|k| w2[k] * (values[2 * (a * nl + k)] - values[2 * (a * nl + k) + 1]) / (2.0 * ladder[k])).sum())
                .collect()
        };
        let c: Complex64 =
            coarse.iter().zip(&thetas).map(|(x, &t)| Complex64::from_polar(*x, -t)).sum::<Complex64>() * 2.0 / n_theta as f64;
        let e = estimate.mean - c;
        estimate = ComplexEstimate::from_cov(estimate.mean, [[e.re * e.re, 0.0], [0.0, e.im * e.im]], 0);
    }
    Ok(FourierModeDerivative { w, estimate, kind: f.kind(), n_theta, ladder, truncated, spectrum })
}
