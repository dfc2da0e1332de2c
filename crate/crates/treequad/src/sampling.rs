//! Initial sample generators.
//!
//! Tree construction is decoupled from how the sample locations were
//! produced: anything that yields a [`SampleBatch`] can feed a builder.
//! Three generators are provided: i.i.d. uniform draws, direct draws from
//! a benchmark problem's normalized mixture truncated to the domain
//! (approximate posterior samples), and a random-walk Metropolis chain
//! targeting the integrand. All are deterministic given their seed.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, TqError};
use crate::problems::Problem;
use crate::seeding::rng_from;

/// Sample locations with their cached integrand values.
///
/// `values[i]` is exactly the integrand evaluated at `locations[i]`; the
/// evaluation that produced it is the only one charged to the problem's
/// counter.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub locations: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// Set when the generator noticed something suspect (e.g. a stuck
    /// Metropolis chain).
    pub warning: Option<String>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    Uniform,
    MixtureDirect,
    Metropolis,
}

impl std::str::FromStr for SamplerKind {
    type Err = TqError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(SamplerKind::Uniform),
            "mixture" => Ok(SamplerKind::MixtureDirect),
            "metropolis" => Ok(SamplerKind::Metropolis),
            other => Err(TqError::InvalidInput(format!(
                "unknown sampler '{other}' (expected uniform, mixture, or metropolis)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    pub n: usize,
    pub seed: u64,
    /// Proposal scale; Metropolis only.
    pub step: f64,
    /// Leading chain states to discard; Metropolis only.
    pub burn_in: usize,
}

impl SamplerConfig {
    pub fn uniform(n: usize, seed: u64) -> Self {
        SamplerConfig { kind: SamplerKind::Uniform, n, seed, step: 0.0, burn_in: 0 }
    }

    pub fn mixture(n: usize, seed: u64) -> Self {
        SamplerConfig { kind: SamplerKind::MixtureDirect, n, seed, step: 0.0, burn_in: 0 }
    }

    pub fn metropolis(n: usize, seed: u64, step: f64, burn_in: usize) -> Self {
        SamplerConfig { kind: SamplerKind::Metropolis, n, seed, step, burn_in }
    }
}

/// Run the configured generator.
pub fn sample(problem: &Problem, config: &SamplerConfig) -> Result<SampleBatch> {
    match config.kind {
        SamplerKind::Uniform => sample_uniform(problem, config.n, config.seed),
        SamplerKind::MixtureDirect => sample_mixture_direct(problem, config.n, config.seed),
        SamplerKind::Metropolis => {
            sample_metropolis(problem, config.n, config.seed, config.step, config.burn_in)
        }
    }
}

/// `n` i.i.d. uniform draws over the problem domain.
pub fn sample_uniform(problem: &Problem, n: usize, seed: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(TqError::InvalidInput("sample count must be at least 1".into()));
    }
    let mut rng = rng_from(seed);
    let mut locations = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let x = problem.domain().sample_uniform(&mut rng);
        values.push(problem.integrand(&x));
        locations.push(x);
    }
    Ok(SampleBatch { locations, values, warning: None })
}

/// Cap on consecutive rejections before the truncated-mixture sampler
/// gives up; benchmark modes sit several sigma inside the domain, so
/// hitting this indicates a misconfigured problem.
const REJECTION_CAP: u64 = 1_000_000;

/// `n` draws from the problem's mixture normalized and truncated to the
/// domain: pick a mode uniformly, draw from its Gaussian, reject draws
/// that land outside. These approximate posterior draws, since the
/// posterior is proportional to the integrand under a uniform prior.
pub fn sample_mixture_direct(problem: &Problem, n: usize, seed: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(TqError::InvalidInput("sample count must be at least 1".into()));
    }
    let spec = problem.mixture().ok_or_else(|| {
        TqError::InvalidInput(format!(
            "problem '{}' has no Gaussian mixture to sample from",
            problem.name()
        ))
    })?;
    let sigma = spec.sigma();
    let modes = spec.means();
    let dim = problem.dim();
    let mut rng = rng_from(seed);
    let mut locations = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let mut rejections = 0u64;
        let x = loop {
            let k = rng.random_range(0..modes.len());
            let mut x = Vec::with_capacity(dim);
            for d in 0..dim {
                let z: f64 = rng.sample(StandardNormal);
                x.push(modes[k][d] + sigma * z);
            }
            if problem.domain().contains(&x) {
                break x;
            }
            rejections += 1;
            if rejections >= REJECTION_CAP {
                return Err(TqError::SamplerFailure(format!(
                    "{REJECTION_CAP} consecutive rejections drawing from the truncated mixture"
                )));
            }
        };
        values.push(problem.integrand(&x));
        locations.push(x);
    }
    Ok(SampleBatch { locations, values, warning: None })
}

/// Random-walk Metropolis targeting the integrand restricted to the
/// domain. The chain starts at the domain center and runs for `n` states
/// in total; the first `burn_in` are discarded. Proposals are isotropic
/// Gaussian steps of scale `step`; proposals outside the domain are
/// rejected without an integrand evaluation.
pub fn sample_metropolis(
    problem: &Problem,
    n: usize,
    seed: u64,
    step: f64,
    burn_in: usize,
) -> Result<SampleBatch> {
    if n == 0 {
        return Err(TqError::InvalidInput("sample count must be at least 1".into()));
    }
    if !(step > 0.0) {
        return Err(TqError::InvalidInput(format!("step scale must be positive, got {step}")));
    }
    if burn_in >= n {
        return Err(TqError::EmptyBatch);
    }
    let dim = problem.dim();
    let mut rng = rng_from(seed);
    let mut current = problem.domain().center();
    let mut current_value = problem.integrand(&current);
    let mut locations = Vec::with_capacity(n - burn_in);
    let mut values = Vec::with_capacity(n - burn_in);
    let mut kept_accepts = 0u64;
    let mut kept_steps = 0u64;
    for state in 0..n {
        if state > 0 {
            let mut proposal = Vec::with_capacity(dim);
            for d in 0..dim {
                let z: f64 = rng.sample(StandardNormal);
                proposal.push(current[d] + step * z);
            }
            let in_domain = problem.domain().contains(&proposal);
            let mut accepted = false;
            if in_domain {
                let proposal_value = problem.integrand(&proposal);
                // Flat-zero regions (underflowed tails) are walked freely.
                accepted = if current_value <= 0.0 {
                    proposal_value >= 0.0
                } else {
                    rng.random::<f64>() < proposal_value / current_value
                };
                if accepted {
                    current = proposal;
                    current_value = proposal_value;
                }
            }
            if state >= burn_in {
                kept_steps += 1;
                if accepted {
                    kept_accepts += 1;
                }
            }
        }
        if state >= burn_in {
            locations.push(current.clone());
            values.push(current_value);
        }
    }
    let warning = if kept_steps > 0 && kept_accepts == 0 {
        Some("stuck chain: no proposal accepted after burn-in".to_string())
    } else {
        None
    };
    Ok(SampleBatch { locations, values, warning })
}
