//! Monte Carlo error analysis: compensated mergeable sums, binning,
//! block jackknife and extrapolation fits.

mod fit;

pub use fit::{
    extrapolate, extrapolate_complex, weighted_least_squares, ComplexEpsRow, ComplexExtrapolation, EpsRow, ExtrapolationResult,
    FitResult, P_GRID,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Neumaier-compensated sum; merging is associative up to the compensation term.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, o: &NeumaierSum) {
        self.add(o.sum);
        self.add(o.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Count, mean and second moment of a stream, mergeable across chains.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub sum: NeumaierSum,
    pub sum_sq: NeumaierSum,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }

    pub fn merge(&mut self, o: &Moments) {
        self.n += o.n;
        self.sum.merge(&o.sum);
        self.sum_sq.merge(&o.sum_sq);
    }

    pub fn mean(&self) -> f64 {
        self.sum.value() / self.n as f64
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let m = self.mean();
        ((self.sum_sq.value() - self.n as f64 * m * m) / (self.n as f64 - 1.0)).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub n_samples: usize,
    pub autocorr_corrected: bool,
}

impl Estimate {
    pub fn exact(mean: f64) -> Self {
        Estimate { mean, std_err: 0.0, n_samples: 0, autocorr_corrected: false }
    }

    /// |mean − target| in units of the error (∞ when the error is 0 and the mean differs).
    pub fn pull(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_err
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexEstimate {
    pub mean: Complex64,
    /// Standard errors of the real and imaginary parts.
    pub std_err: Complex64,
    /// Covariance of (re, im).
    pub cov: [[f64; 2]; 2],
    pub n_samples: usize,
    pub autocorr_corrected: bool,
}

impl ComplexEstimate {
    pub fn from_cov(mean: Complex64, cov: [[f64; 2]; 2], n_samples: usize) -> Self {
        ComplexEstimate {
            mean,
            std_err: Complex64::new(cov[0][0].max(0.0).sqrt(), cov[1][1].max(0.0).sqrt()),
            cov,
            n_samples,
            autocorr_corrected: true,
        }
    }

    /// Mahalanobis distance of the mean from `target`; falls back to the
    /// diagonal when the covariance is singular.
    pub fn pull(&self, target: Complex64) -> f64 {
        let d = self.mean - target;
        let [[a, b], [_, c]] = self.cov;
        let det = a * c - b * b;
        if det > 1e-14 * (a * c).max(1e-300) && det > 0.0 {
            ((c * d.re * d.re - 2.0 * b * d.re * d.im + a * d.im * d.im) / det).sqrt()
        } else {
            let pr = if d.re == 0.0 { 0.0 } else { d.re.abs() / a.sqrt() };
            let pi = if d.im == 0.0 { 0.0 } else { d.im.abs() / c.sqrt() };
            pr.max(pi)
        }
    }

    pub fn abs_err(&self) -> f64 {
        self.std_err.norm()
    }
}

/// Binning analysis of a correlated series.
#[derive(Debug, Clone, PartialEq)]
pub struct Binning {
    pub mean: f64,
    pub std_err: f64,
    /// Integrated autocorrelation time in units of the sample spacing.
    pub tau_int: f64,
    /// (block size, error estimate) per level.
    pub levels: Vec<(usize, f64)>,
}

/// Errors from successive pairwise blocking; the reported error is the
/// largest among levels that keep at least 32 blocks.
pub fn binning_analysis(x: &[f64]) -> Binning {
    let n = x.len();
    let mut m = Moments::default();
    x.iter().for_each(|&v| m.push(v));
    let mean = m.mean();
    let naive = (m.variance() / n as f64).sqrt();
    let mut levels = vec![(1usize, naive)];
    let mut cur: Vec<f64> = x.to_vec();
    let mut size = 1;
    while cur.len() >= 64 {
        cur = cur.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect();
        size *= 2;
        let mut mm = Moments::default();
        cur.iter().for_each(|&v| mm.push(v));
        levels.push((size, (mm.variance() / cur.len() as f64).sqrt()));
    }
    let err = levels.iter().map(|l| l.1).fold(0.0, f64::max);
    let tau = if naive > 0.0 { 0.5 * (err / naive).powi(2) } else { 0.5 };
    Binning { mean, std_err: err, tau_int: tau, levels }
}

/// Jackknife over contiguous blocks of equal-length columns.
pub fn jackknife_blocks(cols: &[&[f64]], n_blocks: usize, f: impl Fn(&[f64]) -> f64) -> Estimate {
    let n = cols[0].len();
    let b = n_blocks.min(n).max(2);
    let mut blocks = Vec::with_capacity(b);
    for k in 0..b {
        let (lo, hi) = (k * n / b, (k + 1) * n / b);
        let sums: Vec<(f64, u64)> = cols
            .iter()
            .map(|c| {
                let mut s = NeumaierSum::default();
                let mut cnt = 0;
                for &v in &c[lo..hi] {
                    if !v.is_nan() {
                        s.add(v);
                        cnt += 1;
                    }
                }
                (s.value(), cnt)
            })
            .collect();
        blocks.push(sums);
    }
    let est = jackknife_from_blocks(&blocks, |m| Complex64::new(f(m), 0.0));
    Estimate { mean: est.mean.re, std_err: est.std_err.re, n_samples: n, autocorr_corrected: true }
}

/// Leave-one-block-out jackknife; each block holds (sum, count) per column.
pub fn jackknife_from_blocks(blocks: &[Vec<(f64, u64)>], f: impl Fn(&[f64]) -> Complex64) -> ComplexEstimate {
    let nb = blocks.len();
    let ncol = blocks.first().map(|b| b.len()).unwrap_or(0);
    let mut tot = vec![(NeumaierSum::default(), 0u64); ncol];
    for bl in blocks {
        for (c, &(s, k)) in bl.iter().enumerate() {
            tot[c].0.add(s);
            tot[c].1 += k;
        }
    }
    let full: Vec<f64> = tot.iter().map(|(s, k)| s.value() / *k as f64).collect();
    let f_full = f(&full);
    let mut loo = Vec::with_capacity(nb);
    for bl in blocks {
        let m: Vec<f64> = (0..ncol)
            .map(|c| {
                let k = tot[c].1 - bl[c].1;
                (tot[c].0.value() - bl[c].0) / k as f64
            })
            .collect();
        loo.push(f(&m));
    }
    let mbar = loo.iter().sum::<Complex64>() / nb as f64;
    let mut cov = [[0.0; 2]; 2];
    for v in &loo {
        let d = v - mbar;
        cov[0][0] += d.re * d.re;
        cov[0][1] += d.re * d.im;
        cov[1][1] += d.im * d.im;
    }
    let k = (nb as f64 - 1.0) / nb as f64;
    cov[0][0] *= k;
    cov[0][1] *= k;
    cov[1][1] *= k;
    cov[1][0] = cov[0][1];
    let n = tot.first().map(|t| t.1 as usize).unwrap_or(0);
    ComplexEstimate::from_cov(f_full, cov, n)
}

/// Per-chain rows of observables; NaN marks a discarded entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTable {
    pub columns: Vec<String>,
    /// chain → row-major values.
    pub chains: Vec<Vec<f64>>,
}

pub const DEFAULT_BLOCKS: usize = 40;

impl SampleTable {
    pub fn new(columns: Vec<String>, chains: Vec<Vec<f64>>) -> Self {
        SampleTable { columns, chains }
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn rows(&self) -> usize {
        self.chains.iter().map(|c| c.len() / self.ncols()).sum()
    }

    pub fn column(&self, col: usize) -> Vec<Vec<f64>> {
        let nc = self.ncols();
        self.chains.iter().map(|c| c.chunks_exact(nc).map(|r| r[col]).collect()).collect()
    }

    pub fn discarded(&self, col: usize) -> usize {
        self.column(col).iter().flatten().filter(|v| v.is_nan()).count()
    }

    /// Contiguous blocks that never straddle chains.
    pub fn blocks(&self, n_blocks: usize) -> Vec<Vec<(f64, u64)>> {
        let nc = self.ncols();
        let per_chain = (n_blocks / self.chains.len().max(1)).max(1);
        let mut out = Vec::new();
        for c in &self.chains {
            let rows = c.len() / nc;
            let nb = per_chain.min(rows.max(1));
            for k in 0..nb {
                let (lo, hi) = (k * rows / nb, (k + 1) * rows / nb);
                let mut sums = vec![(NeumaierSum::default(), 0u64); nc];
                for r in lo..hi {
                    for (j, s) in sums.iter_mut().enumerate() {
                        let v = c[r * nc + j];
                        if !v.is_nan() {
                            s.0.add(v);
                            s.1 += 1;
                        }
                    }
                }
                out.push(sums.into_iter().map(|(s, k)| (s.value(), k)).collect());
            }
        }
        out
    }

    pub fn jackknife(&self, f: impl Fn(&[f64]) -> f64) -> Result<Estimate> {
        let e = self.jackknife_complex(|m| Complex64::new(f(m), 0.0))?;
        Ok(Estimate { mean: e.mean.re, std_err: e.std_err.re, n_samples: e.n_samples, autocorr_corrected: true })
    }

    pub fn jackknife_complex(&self, f: impl Fn(&[f64]) -> Complex64) -> Result<ComplexEstimate> {
        let blocks = self.blocks(DEFAULT_BLOCKS);
        if blocks.len() < 2 {
            return Err(Error::Estimation("fewer than two jackknife blocks".into()));
        }
        for c in 0..self.ncols() {
            let total: u64 = blocks.iter().map(|b| b[c].1).sum();
            if total == 0 {
                return Err(Error::Estimation(format!("column {} has no retained samples", self.columns[c])));
            }
            if blocks.iter().any(|b| total - b[c].1 == 0) {
                return Err(Error::Estimation(format!("column {} retained in a single block", self.columns[c])));
            }
        }
        Ok(jackknife_from_blocks(&blocks, f))
    }

    /// Autocorrelation-corrected mean: binning per chain, combined by weight.
    pub fn mean(&self, col: usize) -> Result<Estimate> {
        let mut total = 0usize;
        let mut acc = NeumaierSum::default();
        let mut var = 0.0;
        let per: Vec<(usize, Binning)> = self
            .column(col)
            .into_iter()
            .map(|v| {
                let kept: Vec<f64> = v.into_iter().filter(|x| !x.is_nan()).collect();
                (kept.len(), binning_analysis(&kept))
            })
            .filter(|(n, _)| *n > 0)
            .collect();
        for (n, _) in &per {
            total += n;
        }
        if total == 0 {
            return Err(Error::Estimation(format!("column {} has no retained samples", self.columns[col])));
        }
        for (n, b) in &per {
            let w = *n as f64 / total as f64;
            acc.add(w * b.mean);
            var += w * w * b.std_err * b.std_err;
        }
        Ok(Estimate { mean: acc.value(), std_err: var.sqrt(), n_samples: total, autocorr_corrected: true })
    }

    /// Σ col / count over retained entries, merged in chain order.
    pub fn plain_mean(&self, col: usize) -> f64 {
        let mut s = NeumaierSum::default();
        let mut k = 0u64;
        for v in self.column(col).iter().flatten() {
            if !v.is_nan() {
                s.add(*v);
                k += 1;
            }
        }
        s.value() / k as f64
    }

    /// Integrated autocorrelation time of a column, averaged over chains.
    pub fn tau_int(&self, col: usize) -> f64 {
        let t: Vec<f64> = self
            .column(col)
            .into_iter()
            .map(|v| binning_analysis(&v.into_iter().filter(|x| !x.is_nan()).collect::<Vec<_>>()).tau_int)
            .collect();
        t.iter().sum::<f64>() / t.len() as f64
    }
}

#[cfg(test)]
mod tests;
