//! Split rules: choosing the cut for a container.
//!
//! `min_sse_axial` searches every candidate axial half-plane — midpoints
//! between consecutive distinct sorted sample coordinates, N x D
//! candidates in all — for the one minimizing the summed within-child
//! squared deviation of the values. `kd_split` cuts the highest-variance
//! sample axis at its coordinate median. `random_axial` is a control
//! baseline: a uniform axis and a uniform interior threshold.

use rand::Rng;

use crate::container::{welford_sse, AxialCut, Container};
use crate::error::{Result, TqError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitRule {
    MinSse,
    Kd,
    RandomAxial,
}

impl SplitRule {
    pub fn id(self) -> &'static str {
        match self {
            SplitRule::MinSse => "minsse",
            SplitRule::Kd => "kd",
            SplitRule::RandomAxial => "random",
        }
    }

    /// Apply this rule to a container. The RNG is consumed only by
    /// [`SplitRule::RandomAxial`].
    pub fn decide<R: Rng>(self, c: &Container, rng: &mut R) -> Result<SplitDecision> {
        match self {
            SplitRule::MinSse => min_sse_axial(c),
            SplitRule::Kd => kd_split(c),
            SplitRule::RandomAxial => random_axial(c, rng),
        }
    }
}

impl std::str::FromStr for SplitRule {
    type Err = TqError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minsse" => Ok(SplitRule::MinSse),
            "kd" => Ok(SplitRule::Kd),
            "random" => Ok(SplitRule::RandomAxial),
            other => Err(TqError::InvalidInput(format!(
                "unknown split rule '{other}' (expected minsse, kd, or random)"
            ))),
        }
    }
}

/// A chosen cut with the summed within-child SSE of the values it yields.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDecision {
    pub cut: AxialCut,
    pub score: f64,
    pub rule: SplitRule,
}

/// Per-prefix and per-suffix SSE of `ys`, via forward and backward Welford
/// passes. `prefix[k]` covers the first `k` elements, `suffix[k]` the rest.
fn prefix_suffix_sse(ys: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = ys.len();
    let mut prefix = vec![0.0; n + 1];
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &y) in ys.iter().enumerate() {
        let delta = y - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (y - mean);
        prefix[i + 1] = m2;
    }
    let mut suffix = vec![0.0; n + 1];
    mean = 0.0;
    m2 = 0.0;
    for (count, i) in (0..n).rev().enumerate() {
        let y = ys[i];
        let delta = y - mean;
        mean += delta / (count + 1) as f64;
        m2 += delta * (y - mean);
        suffix[i] = m2;
    }
    (prefix, suffix)
}

/// Two-pass SSE of the children induced by a cut, iterating samples in
/// container order. Distinct cuts that induce the same partition produce
/// bitwise-identical scores, which the tie rule relies on.
fn exact_children_sse(c: &Container, axis: usize, threshold: f64) -> f64 {
    let side_sse = |keep_left: bool| {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (x, y) in c.xs.iter().zip(&c.ys) {
            if (x[axis] < threshold) == keep_left {
                sum += *y;
                count += 1;
            }
        }
        if count == 0 {
            return 0.0;
        }
        let mean = sum / count as f64;
        let mut sse = 0.0;
        for (x, y) in c.xs.iter().zip(&c.ys) {
            if (x[axis] < threshold) == keep_left {
                sse += (*y - mean) * (*y - mean);
            }
        }
        sse
    };
    side_sse(true) + side_sse(false)
}

/// Exhaustive MinSSE search over all axial candidates. Ties are broken
/// toward the lower axis index, then the lower threshold.
///
/// A sorted Welford sweep per axis locates the minimum; candidates within
/// a small band of it are then re-scored with the exact two-pass SSE so
/// that cuts inducing the same partition from different axes tie exactly
/// and resolve by the stated rule, independent of sweep rounding.
pub fn min_sse_axial(c: &Container) -> Result<SplitDecision> {
    let n = c.len();
    if n < 2 {
        return Err(TqError::DegenerateContainer(format!(
            "{n} sample(s): need at least 2 to split on values"
        )));
    }
    let dim = c.bounds.dim();
    let mut candidates: Vec<(f64, usize, f64)> = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    for axis in 0..dim {
        order.sort_by(|&a, &b| c.xs[a][axis].total_cmp(&c.xs[b][axis]));
        let sorted_ys: Vec<f64> = order.iter().map(|&i| c.ys[i]).collect();
        let (prefix, suffix) = prefix_suffix_sse(&sorted_ys);
        for k in 1..n {
            let lo_coord = c.xs[order[k - 1]][axis];
            let hi_coord = c.xs[order[k]][axis];
            if lo_coord == hi_coord {
                continue;
            }
            let threshold = 0.5 * (lo_coord + hi_coord);
            // Adjacent floats can round the midpoint onto an endpoint,
            // leaving no separating cut there.
            if !(threshold > lo_coord && threshold < hi_coord) {
                continue;
            }
            candidates.push((prefix[k] + suffix[k], axis, threshold));
        }
    }
    let Some(sweep_min) =
        candidates.iter().map(|(s, _, _)| *s).min_by(f64::total_cmp)
    else {
        return Err(TqError::DegenerateContainer("samples coincide on every axis".into()));
    };
    let band = sweep_min + 1e-9 * (1.0 + sweep_min.abs());
    let mut best: Option<(f64, usize, f64)> = None;
    for &(sweep_score, axis, threshold) in &candidates {
        if sweep_score > band {
            continue;
        }
        let score = exact_children_sse(c, axis, threshold);
        if best.is_none_or(|(s, _, _)| score < s) {
            best = Some((score, axis, threshold));
        }
    }
    let (score, axis, threshold) = best.expect("band always contains the sweep minimum");
    Ok(SplitDecision { cut: AxialCut { axis, threshold }, score, rule: SplitRule::MinSse })
}

/// Split perpendicular to the axis with the highest coordinate variance,
/// at the coordinate median. Axes whose median coincides with a container
/// boundary (or with no spread at all) are skipped in favour of the next
/// highest-variance axis.
pub fn kd_split(c: &Container) -> Result<SplitDecision> {
    let n = c.len();
    if n < 2 {
        return Err(TqError::DegenerateContainer(format!(
            "{n} sample(s): need at least 2 to split on coordinates"
        )));
    }
    let dim = c.bounds.dim();
    let mut axes: Vec<(usize, f64)> = (0..dim)
        .map(|axis| {
            let sse = welford_sse(c.xs.iter().map(|x| x[axis]));
            (axis, sse / n as f64)
        })
        .collect();
    // Highest variance first; equal variances resolve to the lower axis.
    axes.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for (axis, _) in axes {
        let mut coords: Vec<f64> = c.xs.iter().map(|x| x[axis]).collect();
        coords.sort_by(f64::total_cmp);
        if coords[0] == coords[n - 1] {
            continue;
        }
        let median = if n % 2 == 1 {
            coords[n / 2]
        } else {
            0.5 * (coords[n / 2 - 1] + coords[n / 2])
        };
        if median <= c.bounds.lower()[axis] || median >= c.bounds.upper()[axis] {
            continue;
        }
        let score = children_sse(c, axis, median);
        return Ok(SplitDecision {
            cut: AxialCut { axis, threshold: median },
            score,
            rule: SplitRule::Kd,
        });
    }
    Err(TqError::DegenerateContainer("no splittable axis".into()))
}

/// Uniformly random axis, uniformly random interior threshold.
pub fn random_axial<R: Rng>(c: &Container, rng: &mut R) -> Result<SplitDecision> {
    let dim = c.bounds.dim();
    let axis = rng.random_range(0..dim);
    let lo = c.bounds.lower()[axis];
    let hi = c.bounds.upper()[axis];
    let threshold = loop {
        let t = rng.random_range(lo..hi);
        if t > lo && t < hi {
            break t;
        }
    };
    let score = children_sse(c, axis, threshold);
    Ok(SplitDecision { cut: AxialCut { axis, threshold }, score, rule: SplitRule::RandomAxial })
}

/// Summed within-child SSE for an arbitrary cut, using the container's
/// membership convention (threshold samples go right).
fn children_sse(c: &Container, axis: usize, threshold: f64) -> f64 {
    let left = c
        .xs
        .iter()
        .zip(&c.ys)
        .filter(|(x, _)| x[axis] < threshold)
        .map(|(_, y)| *y);
    let right = c
        .xs
        .iter()
        .zip(&c.ys)
        .filter(|(x, _)| x[axis] >= threshold)
        .map(|(_, y)| *y);
    welford_sse(left) + welford_sse(right)
}
