//! The `selftest` subcommand: deterministic identities, event geometry and
//! a tiny-lattice Monte Carlo check against exact enumeration.

use std::time::Instant;

use cle_core::domains::{rasterize, DomainSpec};
use cle_core::estimators::{estimate_prob, McSettings};
use cle_core::events::EventSpec;
use cle_core::lattice::LatticeSpec;
use cle_core::sampler::{enumerate_exact, Algorithm, SamplerConfig, BETA_C};
use num_complex::Complex64;

use crate::checks::{events_suite, CheckOutcome, Kernel, DETERMINISTIC};

pub const ORACLE_RESOLUTION: u32 = 2;
pub const ORACLE_MAX_SITES: usize = 20;

/// Crossing of the annulus between radii 0.4 and 0.9 on the unit disk.
pub fn oracle_event() -> EventSpec {
    EventSpec::Crossing {
        outer: DomainSpec::disk(Complex64::new(0.0, 0.0), 0.9),
        inner: DomainSpec::disk(Complex64::new(0.0, 0.0), 0.4),
    }
}

/// Monte Carlo against exact enumeration on a mask of at most 20 sites.
pub fn tiny_oracle(id: &str, seed: u64, chains: usize, samples_per_chain: usize) -> CheckOutcome {
    let run = || -> cle_core::Result<(usize, f64, cle_core::stats::Estimate)> {
        let d = DomainSpec::unit_disk();
        let lattice = LatticeSpec::with_resolution(ORACLE_RESOLUTION)?;
        let sites = rasterize(&d, &lattice)?.len();
        let event = oracle_event();
        let exact = enumerate_exact(&d, &lattice, &event, BETA_C)?;
        let sampler = SamplerConfig { seed, sweeps_burnin: 100, thinning: 1, algorithm: Algorithm::Wolff, beta: BETA_C };
        let mc = McSettings { sampler, chains, samples_per_chain };
        let est = estimate_prob(&event, &d, &lattice, &mc)?;
        Ok((sites, exact, est))
    };
    let (passed, detail) = match run() {
        Ok((sites, exact, est)) => {
            let pull = est.pull(exact);
            (
                sites <= ORACLE_MAX_SITES && pull < 3.0,
                format!(
                    "{sites} sites, exact {exact:.6}, MC {:.6} ± {:.6} over {} samples, pull {pull:.3} (gate 3)",
                    est.mean, est.std_err, est.n_samples
                ),
            )
        }
        Err(e) => (false, e.to_string()),
    };
    CheckOutcome {
        id: id.into(),
        title: "tiny-lattice oracle".into(),
        tag: "Monte Carlo crossing probability equals exact enumeration".into(),
        passed,
        detail,
    }
}

pub fn print_line(c: &CheckOutcome, seconds: f64) {
    let verdict = if c.passed { "PASS" } else { "FAIL" };
    println!("{verdict} [{}] {} ({}) {:.2}s: {}", c.id, c.title, c.tag, seconds, c.detail);
}

/// Runs and prints every check; true when all pass.
pub fn run_selftest(kernel: &Kernel) -> bool {
    let mut all = true;
    for check in DETERMINISTIC {
        let t = Instant::now();
        let c = check(kernel);
        print_line(&c, t.elapsed().as_secs_f64());
        all &= c.passed;
    }
    let t = Instant::now();
    let ev = events_suite();
    let dt = t.elapsed().as_secs_f64() / ev.len().max(1) as f64;
    for c in &ev {
        print_line(c, dt);
        all &= c.passed;
    }
    let t = Instant::now();
    let o = tiny_oracle("8", 20_240_611, 4, 5_000);
    print_line(&o, t.elapsed().as_secs_f64());
    all &= o.passed;
    all
}
