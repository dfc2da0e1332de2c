//! Containers: axis-aligned sub-rectangles holding their samples, the
//! split mechanic, and the per-container integration rules.

use rand::Rng;

use crate::error::{Result, TqError};
use crate::problems::{Domain, Problem};

/// A node of the regression tree: a box together with the sample
/// locations and integrand values that fall inside it.
#[derive(Debug, Clone)]
pub struct Container {
    pub bounds: Domain,
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<f64>,
    pub depth: u32,
    pub id: u64,
}

/// A cut perpendicular to `axis` at `threshold`, strictly interior to the
/// container being split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxialCut {
    pub axis: usize,
    pub threshold: f64,
}

/// How a leaf container is turned into a number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafRule {
    /// Volume times the mean of `m` fresh uniform integrand evaluations.
    Random,
    /// Volume times the integrand at the box center.
    Midpoint,
    /// Volume times the mean of the stored values; no fresh evaluations.
    MeanY,
    /// Volume times the median of the stored values (even count: average
    /// of the two middle values).
    MedianY,
}

impl LeafRule {
    pub fn id(self) -> &'static str {
        match self {
            LeafRule::Random => "random",
            LeafRule::Midpoint => "midpoint",
            LeafRule::MeanY => "mean",
            LeafRule::MedianY => "median",
        }
    }
}

impl std::str::FromStr for LeafRule {
    type Err = TqError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(LeafRule::Random),
            "midpoint" => Ok(LeafRule::Midpoint),
            "mean" => Ok(LeafRule::MeanY),
            "median" => Ok(LeafRule::MedianY),
            other => Err(TqError::InvalidInput(format!(
                "unknown leaf rule '{other}' (expected random, midpoint, mean, or median)"
            ))),
        }
    }
}

/// A single container's integral estimate and what it cost.
#[derive(Debug, Clone, PartialEq)]
pub struct ContainerIntegral {
    pub value: f64,
    /// Fresh integrand evaluations consumed; zero for the mean/median rules.
    pub extra_evals: u64,
    pub rule: LeafRule,
}

impl Container {
    pub fn new(bounds: Domain, xs: Vec<Vec<f64>>, ys: Vec<f64>, depth: u32, id: u64) -> Container {
        debug_assert_eq!(xs.len(), ys.len());
        debug_assert!(xs.iter().all(|x| bounds.contains(x)));
        debug_assert!(bounds.volume() > 0.0);
        Container { bounds, xs, ys, depth, id }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn volume(&self) -> f64 {
        self.bounds.volume()
    }

    /// Spread of the stored values, `max(Y) - min(Y)`; zero for fewer than
    /// two samples. Used as the refinement inaccuracy heuristic.
    pub fn y_range(&self) -> f64 {
        if self.ys.len() <= 1 {
            return 0.0;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &y in &self.ys {
            lo = lo.min(y);
            hi = hi.max(y);
        }
        hi - lo
    }

    /// Population variance of the stored values; zero for fewer than two.
    pub fn y_variance(&self) -> f64 {
        if self.ys.len() <= 1 {
            return 0.0;
        }
        welford_sse(self.ys.iter().copied()) / self.ys.len() as f64
    }

    /// Partition this container at the cut. Samples with coordinate
    /// strictly below the threshold go to the left child; samples exactly
    /// on the threshold go right. Child ids are supplied by the caller.
    pub fn split(self, cut: &AxialCut, left_id: u64, right_id: u64) -> Result<(Container, Container)> {
        if cut.axis >= self.bounds.dim() {
            return Err(TqError::InvalidCut(format!(
                "axis {} out of range for dimension {}",
                cut.axis,
                self.bounds.dim()
            )));
        }
        let lo = self.bounds.lower()[cut.axis];
        let hi = self.bounds.upper()[cut.axis];
        if !(cut.threshold > lo && cut.threshold < hi) {
            return Err(TqError::InvalidCut(format!(
                "threshold {} not strictly inside [{lo}, {hi}] on axis {}",
                cut.threshold, cut.axis
            )));
        }
        let (left_bounds, right_bounds) = self.bounds.split_at(cut.axis, cut.threshold);
        let parent_volume = self.bounds.volume();
        let depth = self.depth + 1;
        let n = self.xs.len();
        let mut left_xs = Vec::new();
        let mut left_ys = Vec::new();
        let mut right_xs = Vec::new();
        let mut right_ys = Vec::new();
        for (x, y) in self.xs.into_iter().zip(self.ys) {
            if x[cut.axis] < cut.threshold {
                left_xs.push(x);
                left_ys.push(y);
            } else {
                right_xs.push(x);
                right_ys.push(y);
            }
        }
        debug_assert_eq!(left_xs.len() + right_xs.len(), n);
        let left = Container::new(left_bounds, left_xs, left_ys, depth, left_id);
        let right = Container::new(right_bounds, right_xs, right_ys, depth, right_id);
        debug_assert!(
            ((left.volume() + right.volume()) - parent_volume).abs() <= 1e-12 * parent_volume,
            "child volumes must sum to the parent volume"
        );
        Ok((left, right))
    }
}

/// Sum of squared deviations about the mean, accumulated with Welford's
/// update so that constant inputs give exactly zero.
pub(crate) fn welford_sse(ys: impl Iterator<Item = f64>) -> f64 {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut count = 0usize;
    for y in ys {
        count += 1;
        let delta = y - mean;
        mean += delta / count as f64;
        m2 += delta * (y - mean);
    }
    m2
}

/// Volume times the mean of `m` fresh integrand evaluations at uniform
/// points inside the container.
pub fn integrate_random<R: Rng>(
    c: &Container,
    problem: &Problem,
    m: usize,
    rng: &mut R,
) -> ContainerIntegral {
    assert!(m >= 1, "random container integral needs at least one evaluation");
    let mut sum = 0.0;
    for _ in 0..m {
        let x = c.bounds.sample_uniform(rng);
        sum += problem.integrand(&x);
    }
    ContainerIntegral {
        value: c.volume() * (sum / m as f64),
        extra_evals: m as u64,
        rule: LeafRule::Random,
    }
}

/// Volume times the integrand at the container center. Cheap but known to
/// be unstable on peaked integrands; kept for comparison.
pub fn integrate_midpoint(c: &Container, problem: &Problem) -> ContainerIntegral {
    let center = c.bounds.center();
    ContainerIntegral {
        value: c.volume() * problem.integrand(&center),
        extra_evals: 1,
        rule: LeafRule::Midpoint,
    }
}

/// Volume times the mean of the stored values.
pub fn integrate_mean_y(c: &Container) -> Result<ContainerIntegral> {
    if c.ys.is_empty() {
        return Err(TqError::EmptyContainer);
    }
    let mean = c.ys.iter().sum::<f64>() / c.ys.len() as f64;
    Ok(ContainerIntegral { value: c.volume() * mean, extra_evals: 0, rule: LeafRule::MeanY })
}

/// Volume times the median of the stored values.
pub fn integrate_median_y(c: &Container) -> Result<ContainerIntegral> {
    if c.ys.is_empty() {
        return Err(TqError::EmptyContainer);
    }
    let mut sorted = c.ys.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    Ok(ContainerIntegral { value: c.volume() * median, extra_evals: 0, rule: LeafRule::MedianY })
}
