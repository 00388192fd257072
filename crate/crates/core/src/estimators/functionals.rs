use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{event_table, McSettings};
use crate::conformal::AnalyticMap;
use crate::derivative::{BoundaryFunctional, Evaluation, FunctionalKind};
use crate::domains::{boundary_components, partner_of, DomainSpec};
use crate::error::{Error, Result};
use crate::events::EventSpec;
use crate::lattice::LatticeSpec;
use crate::stats::SampleTable;

/// Boundary samples used as conformality probes.
const PROBE_POINTS: usize = 64;

/// Lattice, η ladder and angular resolution of a Monte Carlo conformal derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeSettings {
    pub resolution: u32,
    pub ladder: Vec<f64>,
    pub n_theta: usize,
    pub mc: McSettings,
}

/// g(D) as a domain spec; Möbius images stay exact.
pub fn deform_domain(d: &DomainSpec, g: &AnalyticMap) -> DomainSpec {
    match g {
        AnalyticMap::Identity => d.clone(),
        AnalyticMap::Mobius(m) => d.clone().mobius_image(*m),
        _ => d.clone().mapped(g.clone()),
    }
}

fn boundary_probes(d: &DomainSpec) -> Vec<Complex64> {
    boundary_components(d, PROBE_POINTS).map(|cs| cs.into_iter().flat_map(|c| c.points).collect()).unwrap_or_default()
}

fn seeded(mc: &McSettings, seed: Option<u64>) -> Result<McSettings> {
    let seed = seed.ok_or_else(|| Error::Domain("Monte Carlo functional needs a seed".into()))?;
    let mut out = *mc;
    out.sampler.seed = seed;
    Ok(out)
}

/// F(Σ) = P(X)_C with the marked points of X and the domain C deformed together.
#[derive(Debug, Clone)]
pub struct ProbabilityFunctional {
    pub event: EventSpec,
    pub domain: DomainSpec,
    pub lattice: LatticeSpec,
    pub mc: McSettings,
}

impl ProbabilityFunctional {
    pub fn new(event: EventSpec, domain: DomainSpec, lattice: LatticeSpec, mc: McSettings) -> Result<Self> {
        event.validate()?;
        domain.validate()?;
        mc.validate()?;
        Ok(ProbabilityFunctional { event, domain, lattice, mc })
    }
}

impl BoundaryFunctional for ProbabilityFunctional {
    fn kind(&self) -> FunctionalKind {
        FunctionalKind::MonteCarlo
    }

    fn eval(&self, g: &AnalyticMap, seed: Option<u64>) -> Result<Evaluation> {
        let mc = seeded(&self.mc, seed)?;
        let t = event_table(&deform_domain(&self.domain, g), &self.lattice, &[self.event.mapped(g)?], &mc)?;
        Ok(Evaluation { value: t.plain_mean(0), table: Some(t) })
    }

    fn probe_points(&self) -> Vec<Complex64> {
        let mut p = boundary_probes(&self.domain);
        if let Ok(s) = self.event.support().sample_points(PROBE_POINTS) {
            p.extend(s);
        }
        p
    }
}

/// log Z(C|D) = log of P^ren(ℰ(D))_proxy / P^ren(ℰ(D))_C at a fixed corridor
/// width; the normalisation cancels. Only C and D are deformed, the proxy
/// mask is shared by every evaluation.
#[derive(Debug, Clone)]
pub struct RelativeZFunctional {
    pub c: DomainSpec,
    pub d: DomainSpec,
    pub proxy_radius: f64,
    pub eps_fat: f64,
    pub lattice: LatticeSpec,
    pub mc: McSettings,
}

impl RelativeZFunctional {
    pub fn new(c: DomainSpec, d: DomainSpec, proxy_radius: f64, eps_fat: f64, lattice: LatticeSpec, mc: McSettings) -> Result<Self> {
        c.validate()?;
        d.validate()?;
        mc.validate()?;
        partner_of(&d, eps_fat)?;
        Ok(RelativeZFunctional { c, d, proxy_radius, eps_fat, lattice, mc })
    }
}

impl BoundaryFunctional for RelativeZFunctional {
    fn kind(&self) -> FunctionalKind {
        FunctionalKind::MonteCarlo
    }

    fn eval(&self, g: &AnalyticMap, seed: Option<u64>) -> Result<Evaluation> {
        let mc = seeded(&self.mc, seed)?;
        let e = EventSpec::corridor(&deform_domain(&self.d, g), self.eps_fat)?;
        let proxy = DomainSpec::SphereProxy { radius: self.proxy_radius };
        let num = event_table(&proxy, &self.lattice, std::slice::from_ref(&e), &mc)?;
        let den = event_table(&deform_domain(&self.c, g), &self.lattice, &[e], &mc)?;
        let chains = num
            .chains
            .iter()
            .zip(&den.chains)
            .map(|(a, b)| a.iter().zip(b).flat_map(|(x, y)| [*x, *y]).collect())
            .collect();
        let t = SampleTable::new(vec!["proxy".into(), "domain".into()], chains);
        let value = self.reduce(&[t.plain_mean(0), t.plain_mean(1)]);
        Ok(Evaluation { value, table: Some(t) })
    }

    fn reduce(&self, means: &[f64]) -> f64 {
        (means[0] / means[1]).ln()
    }

    fn probe_points(&self) -> Vec<Complex64> {
        let mut p = boundary_probes(&self.c);
        p.extend(boundary_probes(&self.d));
        if let Ok(b) = partner_of(&self.d, self.eps_fat) {
            p.extend(boundary_probes(&b));
        }
        p
    }
}
