//! Critical Ising spins on the triangular lattice with +1 outside the mask;
//! domain walls on the honeycomb dual are the loops.

mod criticality;
mod exact;
mod loops;
mod record;

pub use criticality::{binder_cumulant, binder_scan, BinderPoint};
pub use exact::{enumerate_exact, enumerate_exact_mask, enumerate_exact_with, exact_energy_density, MAX_EXACT_SITES};
pub use loops::{extract_loops, Loop, LoopConfig};
pub use record::{read_loop_records, write_loop_records, LoopRecordWriter, RECORD_MAGIC, RECORD_VERSION};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::{rasterize, DomainSpec, LatticeMask, NONE};
use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;

/// (1/4)·ln 3, the triangular-lattice Ising critical coupling.
pub const BETA_C: f64 = 0.274_653_072_167_027_1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Wolff,
    Metropolis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub seed: u64,
    pub sweeps_burnin: u32,
    pub thinning: u32,
    pub algorithm: Algorithm,
    pub beta: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { seed: 1, sweeps_burnin: 200, thinning: 1, algorithm: Algorithm::Wolff, beta: BETA_C }
    }
}

impl SamplerConfig {
    /// β = 0 and β = ∞ are accepted as limiting cases.
    pub fn validate(&self) -> Result<()> {
        if self.thinning < 1 {
            return Err(Error::Domain("thinning must be at least 1".into()));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::Domain(format!("beta = {} must be non-negative", self.beta)));
        }
        Ok(())
    }
}

/// Per-site ±1 values in mask order; sites outside the mask are +1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinConfig {
    pub spins: Vec<i8>,
}

impl SpinConfig {
    pub fn magnetization(&self) -> f64 {
        self.spins.iter().map(|&s| s as f64).sum::<f64>() / self.spins.len() as f64
    }
}

/// −(1/N)·Σ s_i s_j over bonds with a mask endpoint.
pub fn energy_density(mask: &LatticeMask, spins: &[i8]) -> f64 {
    let mut e = 0i64;
    for b in &mask.bonds {
        let sa = spins[b[0] as usize] as i64;
        let sc = if b[1] == NONE { 1 } else { spins[b[1] as usize] as i64 };
        e -= sa * sc;
    }
    e as f64 / mask.len() as f64
}

/// Generator for chain `chain`: ChaCha8 keyed by the seed, stream = chain.
pub fn chain_rng(seed: u64, chain: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

/// One Markov chain over a mask.
pub struct Sampler<'a> {
    mask: &'a LatticeMask,
    cfg: SamplerConfig,
    rng: ChaCha8Rng,
    spins: Vec<i8>,
    in_cluster: Vec<bool>,
    stack: Vec<u32>,
    cluster: Vec<u32>,
    metro_accept: [f64; 7],
    burned_in: bool,
    /// Cluster moves per sweep, frozen at the end of burn-in.
    wolff_steps: Option<usize>,
    cluster_sites: u64,
    cluster_moves: u64,
}

impl<'a> Sampler<'a> {
    pub fn new(mask: &'a LatticeMask, cfg: SamplerConfig, chain: u64) -> Result<Self> {
        cfg.validate()?;
        let n = mask.len();
        let mut metro_accept = [1.0; 7];
        for (k, a) in metro_accept.iter_mut().enumerate() {
            // ΔE = 2k for k = 0..6.
            *a = if k == 0 { 1.0 } else { (-cfg.beta * 2.0 * k as f64).exp() };
        }
        Ok(Sampler {
            mask,
            cfg,
            rng: chain_rng(cfg.seed, chain),
            spins: vec![1; n],
            in_cluster: vec![false; n],
            stack: Vec::new(),
            cluster: Vec::new(),
            metro_accept,
            burned_in: false,
            wolff_steps: None,
            cluster_sites: 0,
            cluster_moves: 0,
        })
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    /// One sweep: N single-site attempts, or a fixed number of Wolff moves
    /// (clusters totalling ≈ N sites). During burn-in the Wolff sweep stops
    /// once N sites were visited; that stopping rule depends on the state, so
    /// it is replaced by the measured average before any sample is kept.
    pub fn sweep(&mut self) {
        match self.cfg.algorithm {
            Algorithm::Metropolis => self.metropolis_sweep(),
            Algorithm::Wolff => self.wolff_sweep(),
        }
    }

    fn metropolis_sweep(&mut self) {
        let n = self.mask.len();
        for _ in 0..n {
            let i = self.rng.random_range(0..n);
            let s = self.spins[i] as i32;
            let h: i32 = self.mask.neighbours[i]
                .iter()
                .map(|&j| if j == NONE { 1 } else { self.spins[j as usize] as i32 })
                .sum();
            let de = 2 * s * h;
            let accept = de <= 0 || self.rng.random::<f64>() < self.metro_accept[(de / 2) as usize];
            if accept {
                self.spins[i] = -self.spins[i];
            }
        }
    }

    fn wolff_sweep(&mut self) {
        let n = self.mask.len();
        match self.wolff_steps {
            Some(k) => {
                for _ in 0..k {
                    self.wolff_step();
                }
            }
            None => {
                let mut done = 0usize;
                while done < n {
                    let c = self.wolff_step();
                    self.cluster_sites += c as u64;
                    self.cluster_moves += 1;
                    done += c.max(1);
                }
            }
        }
    }

    fn freeze_wolff_steps(&mut self) {
        let mean = if self.cluster_moves == 0 { 1.0 } else { (self.cluster_sites as f64 / self.cluster_moves as f64).max(1.0) };
        self.wolff_steps = Some(((self.mask.len() as f64 / mean).round() as usize).max(1));
    }

    /// Wolff moves per sweep once sampling has started.
    pub fn wolff_steps(&self) -> Option<usize> {
        self.wolff_steps
    }

    /// One cluster move on the mask plus the +1 ghost vertex; returns the
    /// number of flipped sites. A cluster that reaches the ghost is followed
    /// by the global spin flip, so every site outside it is flipped instead.
    fn wolff_step(&mut self) -> usize {
        let n = self.mask.len();
        let p_add = -(-2.0 * self.cfg.beta).exp_m1();
        let seed = self.rng.random_range(0..n);
        let s = self.spins[seed];
        self.cluster.clear();
        self.stack.clear();
        self.stack.push(seed as u32);
        self.in_cluster[seed] = true;
        let mut ghost = false;
        let mut ghost_grown = false;
        loop {
            while let Some(x) = self.stack.pop() {
                self.cluster.push(x);
                for &y in &self.mask.neighbours[x as usize] {
                    if y == NONE {
                        if s > 0 && !ghost && self.rng.random::<f64>() < p_add {
                            ghost = true;
                        }
                        continue;
                    }
                    let yu = y as usize;
                    if !self.in_cluster[yu] && self.spins[yu] == s && self.rng.random::<f64>() < p_add {
                        self.in_cluster[yu] = true;
                        self.stack.push(y);
                    }
                }
            }
            if !ghost || ghost_grown {
                break;
            }
            ghost_grown = true;
            // Grow from the ghost once: each ghost bond of a site outside the
            // cluster is tested here for the first time.
            for &b in &self.mask.boundary_sites {
                let bu = b as usize;
                if self.in_cluster[bu] || self.spins[bu] < 0 {
                    continue;
                }
                let k = self.mask.neighbours[bu].iter().filter(|&&y| y == NONE).count() as i32;
                if k > 0 && self.rng.random::<f64>() < -(-2.0 * self.cfg.beta * k as f64).exp_m1() {
                    self.in_cluster[bu] = true;
                    self.stack.push(b);
                }
            }
        }
        let flipped = if ghost { n - self.cluster.len() } else { self.cluster.len() };
        if ghost {
            for (x, sp) in self.spins.iter_mut().enumerate() {
                if !self.in_cluster[x] {
                    *sp = -*sp;
                }
            }
        } else {
            for &x in &self.cluster {
                self.spins[x as usize] = -s;
            }
        }
        for &x in &self.cluster {
            self.in_cluster[x as usize] = false;
        }
        flipped
    }

    /// Advance `thinning` sweeps (after burn-in on first use) and return the spins.
    pub fn next_spins(&mut self) -> &[i8] {
        if !self.burned_in {
            for _ in 0..self.cfg.sweeps_burnin.max(1) {
                self.sweep();
            }
            self.freeze_wolff_steps();
            self.burned_in = true;
        }
        for _ in 0..self.cfg.thinning {
            self.sweep();
        }
        &self.spins
    }

    pub fn next_spin_config(&mut self) -> SpinConfig {
        SpinConfig { spins: self.next_spins().to_vec() }
    }
}

/// `n` thinned loop configurations from chain 0.
pub fn sample_loop_stream(cfg: &SamplerConfig, d: &DomainSpec, lattice: &LatticeSpec, n: usize) -> Result<Vec<LoopConfig>> {
    let mask = rasterize(d, lattice)?;
    let mut s = Sampler::new(&mask, *cfg, 0)?;
    Ok((0..n).map(|_| extract_loops(s.next_spins(), &mask)).collect())
}

/// Runs `chains` independent chains in parallel; `observe` sees each retained
/// sample and its per-chain outputs are returned in chain order.
pub fn run_chains<T, F>(mask: &LatticeMask, cfg: &SamplerConfig, chains: usize, samples_per_chain: usize, observe: F) -> Result<Vec<Vec<T>>>
where
    T: Send,
    F: Fn(&[i8], &LoopConfig) -> T + Sync,
{
    cfg.validate()?;
    (0..chains)
        .into_par_iter()
        .map(|c| {
            let mut s = Sampler::new(mask, *cfg, c as u64)?;
            let mut out = Vec::with_capacity(samples_per_chain);
            for _ in 0..samples_per_chain {
                let spins = s.next_spins();
                let loops = extract_loops(spins, mask);
                out.push(observe(spins, &loops));
            }
            Ok(out)
        })
        .collect()
}

#[cfg(test)]
mod tests;
