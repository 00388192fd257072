//! Binder-cumulant scan on periodic L×L rhombi, used to check the critical
//! coupling.

use rand::Rng;
use rayon::prelude::*;

use super::chain_rng;
use crate::lattice::NEIGHBOURS;
use crate::stats::Estimate;

#[derive(Debug, Clone, Copy)]
pub struct BinderPoint {
    pub l: usize,
    pub beta: f64,
    pub u: Estimate,
}

/// U = 1 − ⟨m⁴⟩/(3⟨m²⟩²) from Wolff sampling on the periodic triangular lattice.
pub fn binder_cumulant(l: usize, beta: f64, sweeps: usize, seed: u64, chain: u64) -> Estimate {
    let n = l * l;
    let nb: Vec<[usize; 6]> = (0..n)
        .map(|k| {
            let (i, j) = ((k % l) as i64, (k / l) as i64);
            let mut a = [0usize; 6];
            for (t, (di, dj)) in NEIGHBOURS.iter().enumerate() {
                let ii = (i + *di as i64).rem_euclid(l as i64) as usize;
                let jj = (j + *dj as i64).rem_euclid(l as i64) as usize;
                a[t] = jj * l + ii;
            }
            a
        })
        .collect();
    let mut rng = chain_rng(seed, chain);
    let mut spins = vec![1i8; n];
    let mut in_c = vec![false; n];
    let mut stack = Vec::new();
    let mut cluster = Vec::new();
    let p_add = -(-2.0 * beta).exp_m1();
    // A sweep is `moves` clusters, or clusters covering n sites while `moves`
    // is unknown (burn-in only: that stopping rule biases retained samples).
    let mut sweep = |spins: &mut Vec<i8>, rng: &mut rand_chacha::ChaCha8Rng, moves: Option<usize>| -> (usize, usize) {
        let mut done = 0;
        let mut k = 0;
        while moves.map_or(done < n, |m| k < m) {
            k += 1;
            let s0 = rng.random_range(0..n);
            let s = spins[s0];
            stack.clear();
            cluster.clear();
            stack.push(s0);
            in_c[s0] = true;
            while let Some(x) = stack.pop() {
                cluster.push(x);
                for &y in &nb[x] {
                    if !in_c[y] && spins[y] == s && rng.random::<f64>() < p_add {
                        in_c[y] = true;
                        stack.push(y);
                    }
                }
            }
            for &x in &cluster {
                in_c[x] = false;
                spins[x] = -s;
            }
            done += cluster.len();
        }
        (done, k)
    };
    let (mut sites, mut count) = (0, 0);
    for _ in 0..sweeps / 5 + 20 {
        let (d, k) = sweep(&mut spins, &mut rng, None);
        sites += d;
        count += k;
    }
    let moves = Some(((n * count) as f64 / sites as f64).round().max(1.0) as usize);
    let mut m2 = Vec::with_capacity(sweeps);
    let mut m4 = Vec::with_capacity(sweeps);
    for _ in 0..sweeps {
        sweep(&mut spins, &mut rng, moves);
        let m = spins.iter().map(|&s| s as f64).sum::<f64>() / n as f64;
        m2.push(m * m);
        m4.push(m * m * m * m);
    }
    crate::stats::jackknife_blocks(&[&m2, &m4], 32, |x| 1.0 - x[1] / (3.0 * x[0] * x[0]))
}

/// U(L, β) for every pair, evaluated in parallel.
pub fn binder_scan(ls: &[usize], betas: &[f64], sweeps: usize, seed: u64) -> Vec<BinderPoint> {
    let jobs: Vec<(usize, f64, u64)> = ls
        .iter()
        .flat_map(|&l| betas.iter().map(move |&b| (l, b)))
        .enumerate()
        .map(|(k, (l, b))| (l, b, k as u64))
        .collect();
    jobs.par_iter()
        .map(|&(l, beta, chain)| BinderPoint { l, beta, u: binder_cumulant(l, beta, sweeps, seed, chain) })
        .collect()
}
