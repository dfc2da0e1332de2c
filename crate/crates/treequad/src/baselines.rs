//! Reference integrators: simple Monte Carlo, importance sampling, and a
//! classic separable adaptive-grid Vegas.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::container::welford_sse;
use crate::error::{Result, TqError};
use crate::problems::{Domain, GaussianMixtureSpec, Problem};
use crate::result::{IntegralResult, LeafContribution};
use crate::seeding::rng_from;

fn whole_domain_result(problem: &Problem, value: f64, method: &str, seed: u64) -> IntegralResult {
    IntegralResult {
        value,
        contributions: vec![LeafContribution {
            leaf_id: 0,
            bounds: problem.domain().clone(),
            value,
        }],
        evals_sampling: 0,
        evals_active: 0,
        evals_leaf_integration: 0,
        method: method.to_string(),
        seed,
        std_error: None,
        ess: None,
        warnings: Vec::new(),
    }
}

/// Simple Monte Carlo: the mean of the component `f` over `n` i.i.d.
/// draws from the prior (uniform for every problem this crate builds).
pub fn smc(problem: &Problem, n: usize, seed: u64) -> Result<IntegralResult> {
    if n == 0 {
        return Err(TqError::InvalidInput("sample count must be at least 1".into()));
    }
    let mut rng = rng_from(seed);
    let mut sum = 0.0;
    let mut terms = Vec::with_capacity(n);
    for _ in 0..n {
        let x = problem.domain().sample_uniform(&mut rng);
        let h = problem.integrand(&x);
        let p = problem.prior_density(&x);
        let f = h / p;
        sum += f;
        terms.push(f);
    }
    let value = sum / n as f64;
    let mut result = whole_domain_result(problem, value, "smc", seed);
    result.evals_sampling = n as u64;
    if n > 1 {
        result.std_error = Some((welford_sse(terms.into_iter()) / (n - 1) as f64 / n as f64).sqrt());
    }
    Ok(result)
}

/// An importance distribution: something that can be sampled and whose
/// density can be evaluated pointwise. The density must be positive
/// wherever the integrand is nonzero.
pub trait Proposal {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64>;
    fn density(&self, x: &[f64]) -> f64;
    fn label(&self) -> &str {
        "proposal"
    }
}

/// The uniform distribution over a box. With the box equal to the problem
/// domain this is the benchmark prior, and importance sampling reduces to
/// simple Monte Carlo draw for draw.
pub struct UniformProposal {
    domain: Domain,
    density: f64,
}

impl UniformProposal {
    pub fn new(domain: Domain) -> Self {
        let density = 1.0 / domain.volume();
        UniformProposal { domain, density }
    }
}

impl Proposal for UniformProposal {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.domain.sample_uniform(rng)
    }

    fn density(&self, x: &[f64]) -> f64 {
        if self.domain.contains(x) {
            self.density
        } else {
            0.0
        }
    }

    fn label(&self) -> &str {
        "uniform"
    }
}

/// The normalized mixture truncated to the domain: the near-optimal
/// proposal for the benchmark problems. Draws follow the same
/// pick-a-mode / reject-outside scheme as the mixture sampler; the
/// density accounts for the per-mode truncated mass exactly.
pub struct TruncatedMixtureProposal {
    spec: GaussianMixtureSpec,
    domain: Domain,
    mode_masses: Vec<f64>,
}

impl TruncatedMixtureProposal {
    pub fn for_problem(problem: &Problem) -> Result<Self> {
        let spec = problem
            .mixture()
            .ok_or_else(|| {
                TqError::InvalidInput(format!(
                    "problem '{}' has no Gaussian mixture proposal",
                    problem.name()
                ))
            })?
            .clone();
        let domain = problem.domain().clone();
        let mode_masses: Vec<f64> =
            (0..spec.means().len()).map(|k| spec.mode_mass_in(k, &domain)).collect();
        if mode_masses.iter().any(|&m| !(m > 0.0)) {
            return Err(TqError::InvalidInput("a mixture mode has no in-domain mass".into()));
        }
        Ok(TruncatedMixtureProposal { spec, domain, mode_masses })
    }
}

impl Proposal for TruncatedMixtureProposal {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let modes = self.spec.means();
        let sigma = self.spec.sigma();
        for _ in 0..1_000_000u64 {
            let k = rng.random_range(0..modes.len());
            let mut x = Vec::with_capacity(modes[k].len());
            for d in 0..modes[k].len() {
                let z: f64 = rng.sample(StandardNormal);
                x.push(modes[k][d] + sigma * z);
            }
            if self.domain.contains(&x) {
                return x;
            }
        }
        panic!("truncated-mixture proposal rejected 1e6 consecutive draws");
    }

    fn density(&self, x: &[f64]) -> f64 {
        if !self.domain.contains(x) {
            return 0.0;
        }
        let modes = self.spec.means();
        let dim = self.spec.dim() as f64;
        let norm = (2.0 * std::f64::consts::PI * self.spec.sigma_sq()).powf(-0.5 * dim);
        let k_count = modes.len() as f64;
        modes
            .iter()
            .zip(&self.mode_masses)
            .map(|(mu, mass)| {
                let sq_dist: f64 = mu.iter().zip(x).map(|(m, v)| (v - m) * (v - m)).sum();
                norm * (-0.5 * sq_dist / self.spec.sigma_sq()).exp() / mass
            })
            .sum::<f64>()
            / k_count
    }

    fn label(&self) -> &str {
        "mixture"
    }
}

/// Importance sampling: the mean of `f(x) p(x) / g(x)` over draws from
/// the proposal `g`. The prior-over-proposal weights are summarized as an
/// effective sample size `(sum w)^2 / sum w^2`.
pub fn importance_sampling(
    problem: &Problem,
    proposal: &dyn Proposal,
    n: usize,
    seed: u64,
) -> Result<IntegralResult> {
    if n == 0 {
        return Err(TqError::InvalidInput("sample count must be at least 1".into()));
    }
    let mut rng = rng_from(seed);
    let mut sum = 0.0;
    let mut terms = Vec::with_capacity(n);
    let mut weight_sum = 0.0;
    let mut weight_sq_sum = 0.0;
    for _ in 0..n {
        let x = proposal.sample(&mut rng);
        let h = problem.integrand(&x);
        let g = proposal.density(&x);
        let p = problem.prior_density(&x);
        let term = if g > 0.0 {
            let w = p / g;
            weight_sum += w;
            weight_sq_sum += w * w;
            if p > 0.0 {
                (h / p) * w
            } else {
                0.0
            }
        } else if h != 0.0 {
            return Err(TqError::InvalidProposal);
        } else {
            0.0
        };
        sum += term;
        terms.push(term);
    }
    let value = sum / n as f64;
    let mut result =
        whole_domain_result(problem, value, &format!("is/{}", proposal.label()), seed);
    result.evals_sampling = n as u64;
    result.ess = if weight_sq_sum > 0.0 {
        Some(weight_sum * weight_sum / weight_sq_sum)
    } else {
        None
    };
    if n > 1 {
        result.std_error = Some((welford_sse(terms.into_iter()) / (n - 1) as f64 / n as f64).sqrt());
    }
    Ok(result)
}

/// The separable per-axis binned grid Vegas adapts.
#[derive(Debug, Clone)]
pub struct VegasGrid {
    /// Per axis, `bins + 1` strictly increasing edges spanning the domain.
    pub edges: Vec<Vec<f64>>,
    pub bins: usize,
    pub alpha: f64,
}

impl VegasGrid {
    pub fn uniform(domain: &Domain, bins: usize, alpha: f64) -> VegasGrid {
        let edges = (0..domain.dim())
            .map(|d| {
                let lo = domain.lower()[d];
                let hi = domain.upper()[d];
                let mut e: Vec<f64> =
                    (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect();
                e[0] = lo;
                e[bins] = hi;
                e
            })
            .collect();
        VegasGrid { edges, bins, alpha }
    }

    /// Edges strictly increasing and pinned to the domain on both ends.
    pub fn is_valid(&self, domain: &Domain) -> bool {
        self.edges.iter().enumerate().all(|(d, e)| {
            e.len() == self.bins + 1
                && e[0] == domain.lower()[d]
                && e[self.bins] == domain.upper()[d]
                && e.windows(2).all(|w| w[0] < w[1])
        })
    }

    /// Rebuild one axis so each new bin holds an equal share of the
    /// damped importance weights. All-zero weights leave the axis as is.
    pub fn refine_axis(&mut self, axis: usize, importance: &[f64]) {
        let m = self.bins;
        let total: f64 = importance.iter().sum();
        if !(total > 0.0) {
            return;
        }
        // Neighbour smoothing in the standard 1-6-1 / 7-1 stencil.
        let mut smoothed = importance.to_vec();
        if m > 2 {
            smoothed[0] = (7.0 * importance[0] + importance[1]) / 8.0;
            smoothed[m - 1] = (importance[m - 2] + 7.0 * importance[m - 1]) / 8.0;
            for i in 1..m - 1 {
                smoothed[i] = (importance[i - 1] + 6.0 * importance[i] + importance[i + 1]) / 8.0;
            }
        }
        let avg = smoothed.iter().sum::<f64>() / m as f64;
        if !(avg > 0.0) {
            return;
        }
        // Damped compression: ((r - 1) / ln r)^alpha, with the r -> 1
        // limit of 1 and r -> 0 limit of 0.
        let mut compressed: Vec<f64> = smoothed
            .iter()
            .map(|&s| {
                let r = s / avg;
                if r <= 0.0 {
                    0.0
                } else if (r - 1.0).abs() < 1e-12 {
                    1.0
                } else {
                    let c = ((r - 1.0) / r.ln()).powf(self.alpha);
                    if c.is_finite() {
                        c
                    } else {
                        1.0
                    }
                }
            })
            .collect();
        let max_c = compressed.iter().cloned().fold(0.0, f64::max);
        if !(max_c > 0.0) {
            return;
        }
        // A tiny floor keeps every bin width strictly positive after the
        // rebuild.
        let floor = 1e-12 * max_c;
        for c in &mut compressed {
            *c = c.max(floor);
        }
        let total_c: f64 = compressed.iter().sum();
        let per_bin = total_c / m as f64;
        let old = self.edges[axis].clone();
        let mut new_edges = old.clone();
        let mut cum = 0.0;
        let mut j = 0usize;
        for i in 1..m {
            let target = per_bin * i as f64;
            while j < m && cum + compressed[j] < target {
                cum += compressed[j];
                j += 1;
            }
            if j >= m {
                new_edges[i] = old[m];
                continue;
            }
            let frac = (target - cum) / compressed[j];
            new_edges[i] = old[j] + frac * (old[j + 1] - old[j]);
        }
        // Guard against rounding producing non-increasing edges.
        for i in 1..=m {
            let lo = new_edges[i - 1];
            if new_edges[i] <= lo {
                new_edges[i] = lo + (old[m] - old[0]) * f64::EPSILON * i as f64;
            }
        }
        new_edges[m] = old[m];
        if new_edges.windows(2).all(|w| w[0] < w[1]) {
            self.edges[axis] = new_edges;
        }
    }
}

/// How Vegas places its evaluation points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VegasMode {
    /// Pure importance sampling on the grid density: per axis, pick a bin
    /// uniformly and a point uniformly inside it.
    ImportanceOnly,
    /// The classic combination: the unit cube of grid coordinates is cut
    /// into equal strata (as many as the budget affords at two points
    /// each) and every stratum receives its share of points, mapped
    /// through the importance grid. Falls back to pure importance
    /// sampling when the dimension is too high for even two strata per
    /// axis.
    Stratified,
}

impl std::str::FromStr for VegasMode {
    type Err = TqError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "importance" => Ok(VegasMode::ImportanceOnly),
            "stratified" => Ok(VegasMode::Stratified),
            other => Err(TqError::InvalidInput(format!(
                "unknown vegas mode '{other}' (expected importance or stratified)"
            ))),
        }
    }
}

/// Strata per axis so that every cell can hold at least two points.
fn strata_per_axis(n_iter: usize, dim: usize) -> usize {
    let budget = (n_iter / 2).max(1) as f64;
    let mut ng = budget.powf(1.0 / dim as f64).floor() as usize;
    ng = ng.max(1);
    while ng > 1 && (ng as u64).pow(dim as u32).saturating_mul(2) > n_iter as u64 {
        ng -= 1;
    }
    ng
}

/// Classic separable Vegas with the given sampling mode. Per-axis
/// importance (the mean squared weighted value per bin) drives the grid
/// rebuild after every iteration; per-iteration estimates are combined
/// inverse-variance weighted.
pub fn vegas_with_mode(
    problem: &Problem,
    n_total: usize,
    iterations: usize,
    bins: usize,
    alpha: f64,
    mode: VegasMode,
    seed: u64,
) -> Result<IntegralResult> {
    if iterations == 0 {
        return Err(TqError::InvalidInput("need at least one iteration".into()));
    }
    if bins < 2 {
        return Err(TqError::InvalidInput("need at least two bins per axis".into()));
    }
    if n_total < iterations {
        return Err(TqError::InvalidInput(format!(
            "{n_total} total evaluations cannot cover {iterations} iterations"
        )));
    }
    let dim = problem.dim();
    let mut grid = VegasGrid::uniform(problem.domain(), bins, alpha);
    let mut rng = rng_from(seed);
    let base = n_total / iterations;
    let remainder = n_total - base * iterations;

    let mut weighted_num = 0.0;
    let mut weighted_den = 0.0;
    let mut combined_any = false;
    let mut x = vec![0.0f64; dim];
    let mut chosen = vec![0usize; dim];
    for iteration in 0..iterations {
        let n_iter = base + usize::from(iteration < remainder);
        let ng = match mode {
            VegasMode::ImportanceOnly => 1,
            VegasMode::Stratified => strata_per_axis(n_iter, dim),
        };
        let cells = (ng as u64).pow(dim as u32) as usize;
        let per_cell = n_iter / cells;
        let extra = n_iter - per_cell * cells;

        let mut bin_sum = vec![vec![0.0f64; bins]; dim];
        let mut bin_count = vec![vec![0u64; bins]; dim];
        let mut sum_w2_total = 0.0;
        let mut estimate = 0.0;
        let mut variance = 0.0;
        let mut variance_ok = true;
        let mut cell_index = vec![0usize; dim];
        for cell in 0..cells {
            let count = per_cell + usize::from(cell < extra);
            let mut cell_sum = 0.0;
            let mut cell_sum2 = 0.0;
            for _ in 0..count {
                let mut inv_density = 1.0;
                for d in 0..dim {
                    let u: f64 = rng.random();
                    let y = (cell_index[d] as f64 + u) / ng as f64;
                    let pos = y * bins as f64;
                    let j = (pos as usize).min(bins - 1);
                    let width = grid.edges[d][j + 1] - grid.edges[d][j];
                    x[d] = grid.edges[d][j] + (pos - j as f64) * width;
                    inv_density *= bins as f64 * width;
                    chosen[d] = j;
                }
                let w = problem.integrand(&x) * inv_density;
                cell_sum += w;
                cell_sum2 += w * w;
                for d in 0..dim {
                    bin_sum[d][chosen[d]] += w * w;
                    bin_count[d][chosen[d]] += 1;
                }
            }
            sum_w2_total += cell_sum2;
            let cell_mean = cell_sum / count as f64;
            estimate += cell_mean / cells as f64;
            if count >= 2 {
                let cell_var =
                    ((cell_sum2 - cell_sum * cell_mean) / (count - 1) as f64).max(0.0);
                variance += cell_var / count as f64 / (cells * cells) as f64;
            } else {
                variance_ok = false;
            }
            // Odometer over the stratification cells.
            for d in (0..dim).rev() {
                cell_index[d] += 1;
                if cell_index[d] < ng {
                    break;
                }
                cell_index[d] = 0;
            }
        }
        if sum_w2_total > 0.0 {
            // Importance weights: per-bin mean of the squared weighted
            // values, so a flat integrand leaves the grid unchanged.
            for d in 0..dim {
                let importance: Vec<f64> = bin_sum[d]
                    .iter()
                    .zip(&bin_count[d])
                    .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
                    .collect();
                grid.refine_axis(d, &importance);
            }
            debug_assert!(grid.is_valid(problem.domain()));
        } else {
            // An all-zero iteration carries no information: estimate 0
            // with infinite variance, excluded from the combination; the
            // grid is left unchanged.
            continue;
        }
        if !variance_ok {
            continue;
        }
        // Zero-variance iterations get a tiny relative floor to keep the
        // inverse-variance combination finite and overflow-free.
        let var = variance.max(1e-300 * (1.0 + estimate * estimate));
        weighted_num += estimate / var;
        weighted_den += 1.0 / var;
        combined_any = true;
    }
    let value = if combined_any { weighted_num / weighted_den } else { 0.0 };
    let mut result = whole_domain_result(problem, value, "vegas", seed);
    result.evals_sampling = n_total as u64;
    result.std_error = if combined_any { Some((1.0 / weighted_den).sqrt()) } else { Some(0.0) };
    Ok(result)
}

/// [`vegas_with_mode`] in the default stratified mode.
pub fn vegas(
    problem: &Problem,
    n_total: usize,
    iterations: usize,
    bins: usize,
    alpha: f64,
    seed: u64,
) -> Result<IntegralResult> {
    vegas_with_mode(problem, n_total, iterations, bins, alpha, VegasMode::Stratified, seed)
}
