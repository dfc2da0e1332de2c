//! Post-hoc reliability diagnostics for a fitted tree.
//!
//! The removal curve re-estimates the integral as the largest containers
//! are excluded, using the subset-integral identity: over any sub-domain,
//! the integral of the retained contributions divided by the fraction of
//! posterior samples retained recovers the full value. Instability of the
//! curve flags unreliable runs. The cumulative curve accumulates
//! contributions largest-container-first; sharp jumps flag sensitivity to
//! single regions. Surrogate sampling draws approximate posterior points
//! from the fitted tree itself.

use rand::distr::weighted::WeightedIndex;
use rand::prelude::Distribution;

use crate::error::{Result, TqError};
use crate::problems::Domain;
use crate::result::{IntegralResult, LeafContribution};
use crate::sampling::SampleBatch;
use crate::seeding::rng_from;

/// One re-estimate after removing the `removed` largest containers.
#[derive(Debug, Clone, PartialEq)]
pub struct RemovalCurvePoint {
    pub removed: usize,
    pub estimate: f64,
    /// Fraction of the posterior batch falling in the retained leaves.
    pub retained_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemovalCurve {
    pub points: Vec<RemovalCurvePoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeCurvePoint {
    pub included: usize,
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeCurve {
    pub points: Vec<CumulativeCurvePoint>,
}

/// Approximate posterior draws from the fitted tree.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateSample {
    pub locations: Vec<Vec<f64>>,
    pub leaf_ids: Vec<u64>,
    /// Set when negative contributions had to be excluded from selection.
    pub warning: Option<String>,
}

/// The leaf owning `x` under the half-open convention `[lower, upper)`,
/// with points on the global domain's upper face belonging to the
/// adjacent (last) leaf; `None` outside the domain. Consistent with the
/// split tie rule, so every in-domain point has exactly one owner.
pub fn membership(x: &[f64], leaves: &[LeafContribution], domain: &Domain) -> Option<u64> {
    if !domain.contains(x) {
        return None;
    }
    'leaf: for leaf in leaves {
        let b = &leaf.bounds;
        for d in 0..b.dim() {
            let v = x[d];
            if v < b.lower()[d] {
                continue 'leaf;
            }
            let on_global_face = v == domain.upper()[d];
            if v > b.upper()[d] || (v == b.upper()[d] && !on_global_face) {
                continue 'leaf;
            }
        }
        return Some(leaf.leaf_id);
    }
    None
}

/// What "largest" means when ranking containers for removal/inclusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RemovalOrder {
    /// Largest box volume first (the default reading).
    #[default]
    Volume,
    /// Largest absolute contribution first.
    Contribution,
}

impl std::str::FromStr for RemovalOrder {
    type Err = TqError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "volume" => Ok(RemovalOrder::Volume),
            "contribution" => Ok(RemovalOrder::Contribution),
            other => Err(TqError::InvalidInput(format!(
                "unknown removal order '{other}' (expected volume or contribution)"
            ))),
        }
    }
}

/// Contribution indices, largest first per the chosen order, ties by
/// ascending leaf id.
fn descending_order(contributions: &[LeafContribution], order: RemovalOrder) -> Vec<usize> {
    let size = |c: &LeafContribution| match order {
        RemovalOrder::Volume => c.bounds.volume(),
        RemovalOrder::Contribution => c.value.abs(),
    };
    let mut indices: Vec<usize> = (0..contributions.len()).collect();
    indices.sort_by(|&a, &b| {
        size(&contributions[b])
            .total_cmp(&size(&contributions[a]))
            .then_with(|| contributions[a].leaf_id.cmp(&contributions[b].leaf_id))
    });
    indices
}

fn descending_volume_order(contributions: &[LeafContribution]) -> Vec<usize> {
    descending_order(contributions, RemovalOrder::Volume)
}

/// Remove containers largest-volume-first, re-estimating the integral at
/// each step as (retained contribution sum) / (retained posterior
/// fraction). Recording stops before the retained fraction reaches zero.
pub fn removal_curve(result: &IntegralResult, posterior: &SampleBatch) -> Result<RemovalCurve> {
    removal_curve_ordered(result, posterior, RemovalOrder::Volume)
}

/// [`removal_curve`] with an explicit removal ranking.
pub fn removal_curve_ordered(
    result: &IntegralResult,
    posterior: &SampleBatch,
    order: RemovalOrder,
) -> Result<RemovalCurve> {
    if result.contributions.is_empty() {
        return Err(TqError::InvalidInput("result carries no leaf contributions".into()));
    }
    if posterior.is_empty() {
        return Err(TqError::InvalidInput("posterior batch is empty".into()));
    }
    let contributions = &result.contributions;
    let domain = outer_domain(contributions)?;
    let mut per_leaf_counts: std::collections::HashMap<u64, u64> = std::collections::HashMap::new();
    let mut in_domain = 0u64;
    for x in &posterior.locations {
        if let Some(id) = membership(x, contributions, &domain) {
            *per_leaf_counts.entry(id).or_insert(0) += 1;
            in_domain += 1;
        }
    }
    if in_domain == 0 {
        return Err(TqError::InvalidInput(
            "no posterior sample falls inside the integration domain".into(),
        ));
    }
    let n = posterior.len() as f64;
    let ranking = descending_order(contributions, order);
    let mut retained_value: f64 = contributions.iter().map(|c| c.value).sum();
    let mut retained_count = in_domain;
    let mut points = Vec::with_capacity(contributions.len());
    for (step, &idx) in ranking.iter().enumerate() {
        let fraction = retained_count as f64 / n;
        if fraction == 0.0 {
            break;
        }
        points.push(RemovalCurvePoint {
            removed: step,
            estimate: retained_value / fraction,
            retained_fraction: fraction,
        });
        let leaf = &contributions[idx];
        retained_value -= leaf.value;
        retained_count -= per_leaf_counts.get(&leaf.leaf_id).copied().unwrap_or(0);
    }
    Ok(RemovalCurve { points })
}

/// The axis-aligned hull of the leaf bounds: the root domain, given that
/// the leaves tile it.
fn outer_domain(contributions: &[LeafContribution]) -> Result<Domain> {
    let dim = contributions[0].bounds.dim();
    let mut lower = vec![f64::INFINITY; dim];
    let mut upper = vec![f64::NEG_INFINITY; dim];
    for c in contributions {
        for d in 0..dim {
            lower[d] = lower[d].min(c.bounds.lower()[d]);
            upper[d] = upper[d].max(c.bounds.upper()[d]);
        }
    }
    Domain::new(lower, upper)
}

/// Include containers largest-volume-first, accumulating contributions.
pub fn cumulative_curve(result: &IntegralResult) -> Result<CumulativeCurve> {
    if result.contributions.is_empty() {
        return Err(TqError::InvalidInput("result carries no leaf contributions".into()));
    }
    let order = descending_volume_order(&result.contributions);
    let mut cumulative = 0.0;
    let points = order
        .iter()
        .enumerate()
        .map(|(i, &idx)| {
            cumulative += result.contributions[idx].value;
            CumulativeCurvePoint { included: i + 1, cumulative }
        })
        .collect();
    Ok(CumulativeCurve { points })
}

/// Draw `n` approximate posterior samples from the fitted tree: select a
/// leaf with probability proportional to its (positive) contribution,
/// then sample uniformly inside it. Leaves with non-positive
/// contributions are never selected; their presence is flagged.
pub fn surrogate_sample(result: &IntegralResult, n: usize, seed: u64) -> Result<SurrogateSample> {
    if result.contributions.is_empty() {
        return Err(TqError::NoMass);
    }
    let weights: Vec<f64> = result.contributions.iter().map(|c| c.value.max(0.0)).collect();
    let negatives = result.contributions.iter().filter(|c| c.value < 0.0).count();
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(TqError::NoMass);
    }
    let index = WeightedIndex::new(&weights)
        .map_err(|_| TqError::NoMass)?;
    let mut rng = rng_from(seed);
    let mut locations = Vec::with_capacity(n);
    let mut leaf_ids = Vec::with_capacity(n);
    for _ in 0..n {
        let pick = index.sample(&mut rng);
        let leaf = &result.contributions[pick];
        locations.push(leaf.bounds.sample_uniform(&mut rng));
        leaf_ids.push(leaf.leaf_id);
    }
    let warning = (negatives > 0).then(|| {
        format!("{negatives} leaf contribution(s) were negative and excluded from selection")
    });
    Ok(SurrogateSample { locations, leaf_ids, warning })
}
