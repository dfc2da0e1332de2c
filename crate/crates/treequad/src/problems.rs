//! Integration problems: domain, integrand, prior, and analytic truth.
//!
//! A [`Problem`] bundles the weighted integrand `h(x) = f(x) * p(x)` whose
//! integral over the domain is sought, the component function `f` and the
//! prior density `p` separately (the diagnostics need them apart), the
//! analytic true value, and a shared evaluation counter. The three
//! benchmark families (`gaussian`, `camel`, `quad`) are isotropic Gaussian
//! mixtures under a uniform prior, so their true values have a closed form
//! evaluated by [`true_value_oracle`].

use std::f64::consts::{PI, SQRT_2};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;
use statrs::function::erf::erfc;

use crate::error::{Result, TqError};

/// Standard normal CDF.
pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// An axis-aligned hyper-rectangle `[lower_d, upper_d]` for each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(TqError::InvalidDomain(format!(
                "bound lengths {} and {} must match and be at least 1",
                lower.len(),
                upper.len()
            )));
        }
        for (d, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(TqError::InvalidDomain(format!(
                    "axis {d}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Domain { lower, upper })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        if dim == 0 {
            return Err(TqError::InvalidDimension);
        }
        Domain::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn unit_cube(dim: usize) -> Result<Self> {
        Domain::cube(dim, 0.0, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    /// One uniform draw from the box. Consumes exactly `dim` RNG values,
    /// axis by axis, which callers rely on for reproducible streams.
    pub fn sample_uniform<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| rng.random_range(*lo..*hi))
            .collect()
    }

    /// Split the box at `threshold` on `axis` into (lower, upper) parts.
    pub(crate) fn split_at(&self, axis: usize, threshold: f64) -> (Domain, Domain) {
        let mut left = self.clone();
        let mut right = self.clone();
        left.upper[axis] = threshold;
        right.lower[axis] = threshold;
        (left, right)
    }
}

/// An equally weighted sum of isotropic Gaussian densities, the common
/// form of all benchmark integrands: `f(x) = sum_k N(x | mu_k, sigma2 * I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixtureSpec {
    means: Vec<Vec<f64>>,
    sigma_sq: f64,
}

impl GaussianMixtureSpec {
    pub fn new(means: Vec<Vec<f64>>, sigma_sq: f64) -> Result<Self> {
        if means.is_empty() || means[0].is_empty() {
            return Err(TqError::InvalidInput("mixture needs at least one mode".into()));
        }
        if !(sigma_sq > 0.0) {
            return Err(TqError::InvalidInput(format!(
                "sigma_sq must be positive, got {sigma_sq}"
            )));
        }
        let dim = means[0].len();
        if means.iter().any(|m| m.len() != dim) {
            return Err(TqError::InvalidInput("mode dimensions differ".into()));
        }
        Ok(GaussianMixtureSpec { means, sigma_sq })
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    pub fn sigma(&self) -> f64 {
        self.sigma_sq.sqrt()
    }

    /// Unnormalized mixture value: plain sum of the component densities.
    pub fn density(&self, x: &[f64]) -> f64 {
        let dim = self.dim() as f64;
        let norm = (2.0 * PI * self.sigma_sq).powf(-0.5 * dim);
        self.means
            .iter()
            .map(|mu| {
                let sq_dist: f64 = mu.iter().zip(x).map(|(m, v)| (v - m) * (v - m)).sum();
                norm * (-0.5 * sq_dist / self.sigma_sq).exp()
            })
            .sum()
    }

    /// Gaussian mass of mode `k` inside the box: the per-axis CDF product.
    pub fn mode_mass_in(&self, k: usize, domain: &Domain) -> f64 {
        let sigma = self.sigma();
        self.means[k]
            .iter()
            .enumerate()
            .map(|(d, mu)| {
                normal_cdf((domain.upper()[d] - mu) / sigma)
                    - normal_cdf((domain.lower()[d] - mu) / sigma)
            })
            .product()
    }

    /// Total in-box mass over all modes.
    pub fn total_mass_in(&self, domain: &Domain) -> f64 {
        (0..self.means.len()).map(|k| self.mode_mass_in(k, domain)).sum()
    }
}

/// Exact value of the weighted integral for an isotropic mixture `f` under
/// a uniform prior over `domain`: the mixture's in-box Gaussian mass
/// (separable CDF product per mode) times the constant prior density.
pub fn true_value_oracle(spec: &GaussianMixtureSpec, domain: &Domain) -> Result<f64> {
    if spec.dim() != domain.dim() {
        return Err(TqError::Unsupported(format!(
            "mixture dimension {} does not match domain dimension {}",
            spec.dim(),
            domain.dim()
        )));
    }
    for (k, mu) in spec.means().iter().enumerate() {
        if !domain.contains(mu) {
            return Err(TqError::Unsupported(format!(
                "mode {k} lies outside the integration domain"
            )));
        }
    }
    Ok(spec.total_mass_in(domain) / domain.volume())
}

type DynFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// An integration problem: the integrand `h = f * p`, its factors, the
/// domain, the analytic true value, and an evaluation counter.
///
/// Definitions are immutable and shareable across threads; the counter is
/// atomic and increments by exactly one per [`Problem::integrand`] call.
pub struct Problem {
    name: String,
    domain: Domain,
    integrand: Arc<DynFn>,
    component: Arc<DynFn>,
    prior: Arc<DynFn>,
    true_value: f64,
    mixture: Option<GaussianMixtureSpec>,
    evals: AtomicU64,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("true_value", &self.true_value)
            .field("evals", &self.eval_count())
            .finish()
    }
}

const BENCH_SIGMA_SQ: f64 = 1.0 / 200.0;

impl Problem {
    fn from_mixture(name: &str, domain: Domain, spec: GaussianMixtureSpec) -> Result<Problem> {
        let true_value = true_value_oracle(&spec, &domain)?;
        let density = 1.0 / domain.volume();
        let prior_domain = domain.clone();
        let prior = Arc::new(move |x: &[f64]| {
            if prior_domain.contains(x) {
                density
            } else {
                0.0
            }
        });
        let f_spec = spec.clone();
        let component = Arc::new(move |x: &[f64]| f_spec.density(x));
        let h_component = Arc::clone(&component) as Arc<DynFn>;
        let h_prior = Arc::clone(&prior) as Arc<DynFn>;
        let integrand = Arc::new(move |x: &[f64]| h_component(x) * h_prior(x));
        Ok(Problem {
            name: name.to_string(),
            domain,
            integrand,
            component,
            prior,
            true_value,
            mixture: Some(spec),
            evals: AtomicU64::new(0),
        })
    }

    /// Single isotropic normal at the origin over `[-1, 1]^dim`.
    pub fn gaussian(dim: usize) -> Result<Problem> {
        let domain = Domain::cube(dim, -1.0, 1.0)?;
        let spec = GaussianMixtureSpec::new(vec![vec![0.0; dim]], BENCH_SIGMA_SQ)?;
        Problem::from_mixture("gaussian", domain, spec)
    }

    /// Two modes at 1/3 and 2/3 along the diagonal of the unit cube.
    pub fn camel(dim: usize) -> Result<Problem> {
        let domain = Domain::unit_cube(dim)?;
        let spec = GaussianMixtureSpec::new(
            vec![vec![1.0 / 3.0; dim], vec![2.0 / 3.0; dim]],
            BENCH_SIGMA_SQ,
        )?;
        Problem::from_mixture("camel", domain, spec)
    }

    /// Four modes at 2, 4, 6, 8 along the diagonal of `[0, 10]^dim`.
    pub fn quad_camel(dim: usize) -> Result<Problem> {
        let domain = Domain::cube(dim, 0.0, 10.0)?;
        let spec = GaussianMixtureSpec::new(
            vec![vec![2.0; dim], vec![4.0; dim], vec![6.0; dim], vec![8.0; dim]],
            BENCH_SIGMA_SQ,
        )?;
        Problem::from_mixture("quad", domain, spec)
    }

    /// Look up a benchmark problem by its string id.
    pub fn by_id(id: &str, dim: usize) -> Result<Problem> {
        match id {
            "gaussian" => Problem::gaussian(dim),
            "camel" => Problem::camel(dim),
            "quad" => Problem::quad_camel(dim),
            other => Err(TqError::InvalidInput(format!(
                "unknown problem id '{other}' (expected gaussian, camel, or quad)"
            ))),
        }
    }

    /// A problem with an arbitrary integrand `h` under a uniform prior.
    /// `true_value` must be the exact integral of `h` over the domain.
    pub fn from_fn<F>(name: &str, domain: Domain, h: F, true_value: f64) -> Problem
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        let density = 1.0 / domain.volume();
        let prior_domain = domain.clone();
        let prior = Arc::new(move |x: &[f64]| {
            if prior_domain.contains(x) {
                density
            } else {
                0.0
            }
        });
        let integrand: Arc<DynFn> = Arc::new(h);
        let comp_h = Arc::clone(&integrand);
        // f = h / p inside the domain (h is zero outside by convention).
        let component = Arc::new(move |x: &[f64]| comp_h(x) / density);
        Problem {
            name: name.to_string(),
            domain,
            integrand,
            component,
            prior,
            true_value,
            mixture: None,
            evals: AtomicU64::new(0),
        }
    }

    /// Constant integrand `h = c`; true value is `c * volume`.
    pub fn constant(domain: Domain, c: f64) -> Problem {
        let true_value = c * domain.volume();
        Problem::from_fn("constant", domain, move |_| c, true_value)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn true_value(&self) -> f64 {
        self.true_value
    }

    pub fn mixture(&self) -> Option<&GaussianMixtureSpec> {
        self.mixture.as_ref()
    }

    /// The integrand `h(x) = f(x) * p(x)`. Counted: every call bumps the
    /// evaluation counter by one.
    pub fn integrand(&self, x: &[f64]) -> f64 {
        self.evals.fetch_add(1, Ordering::Relaxed);
        (self.integrand)(x)
    }

    /// The component `f` alone (likelihood in the evidence reading). Not
    /// counted against the evaluation budget.
    pub fn component_integrand(&self, x: &[f64]) -> f64 {
        (self.component)(x)
    }

    /// The prior density `p`; zero outside the domain. Not counted.
    pub fn prior_density(&self, x: &[f64]) -> f64 {
        (self.prior)(x)
    }

    pub fn eval_count(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite trapezoid rule over the 1-D domain, used as an
    /// independent oracle for the analytic CDF-product truth.
    fn trapezoid_1d(problem: &Problem, points: usize) -> f64 {
        let lo = problem.domain().lower()[0];
        let hi = problem.domain().upper()[0];
        let n = points - 1;
        let dx = (hi - lo) / n as f64;
        let mut acc = 0.5 * (problem.integrand(&[lo]) + problem.integrand(&[hi]));
        for i in 1..n {
            acc += problem.integrand(&[lo + i as f64 * dx]);
        }
        acc * dx
    }

    #[test]
    fn gaussian_dim1_true_value_is_half() {
        let p = Problem::gaussian(1).unwrap();
        // erf(10) == 1 to double precision, so the mass is 0.5 exactly.
        assert!((p.true_value() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gaussian_dim10_true_value_is_two_pow_neg_ten() {
        let p = Problem::gaussian(10).unwrap();
        assert!((p.true_value() - 2f64.powi(-10)).abs() / 2f64.powi(-10) < 1e-12);
        assert!((p.true_value() - 9.765625e-4).abs() < 1e-12);
    }

    #[test]
    fn gaussian_dim5_matches_erf_formula() {
        let p = Problem::gaussian(5).unwrap();
        let expected = statrs::function::erf::erf(10.0).powi(5) / 2f64.powi(5);
        assert_eq!(p.true_value(), expected);
    }

    #[test]
    fn camel_dim1_true_value_matches_cdf_product() {
        let p = Problem::camel(1).unwrap();
        let sigma = BENCH_SIGMA_SQ.sqrt();
        let mode = |mu: f64| normal_cdf((1.0 - mu) / sigma) - normal_cdf((0.0 - mu) / sigma);
        let expected = mode(1.0 / 3.0) + mode(2.0 / 3.0);
        assert_eq!(p.true_value(), expected);
        assert!(p.true_value() < 2.0 && p.true_value() > 1.999);
    }

    #[test]
    fn quad_camel_true_values() {
        let p1 = Problem::quad_camel(1).unwrap();
        assert!((p1.true_value() - 0.4).abs() < 1e-6);
        let p5 = Problem::quad_camel(5).unwrap();
        assert!((p5.true_value() - 4e-5).abs() / 4e-5 < 1e-4);
    }

    #[test]
    fn true_values_match_dense_trapezoid_oracle_dim1() {
        for id in ["gaussian", "camel", "quad"] {
            let p = Problem::by_id(id, 1).unwrap();
            let points = if id == "quad" { 4_000_001 } else { 1_000_001 };
            let numeric = trapezoid_1d(&p, points);
            let rel = (numeric - p.true_value()).abs() / p.true_value();
            assert!(rel < 1e-8, "{id}: analytic {} vs trapezoid {numeric}", p.true_value());
        }
    }

    #[test]
    fn camel_dim1_oracle_vs_ten_million_point_trapezoid() {
        let p = Problem::camel(1).unwrap();
        let numeric = trapezoid_1d(&p, 10_000_001);
        assert!((numeric - p.true_value()).abs() / p.true_value() < 1e-8);
    }

    #[test]
    fn separable_true_value_is_per_axis_product() {
        // The in-box mass factorizes exactly over axes, so the true value
        // is (per-axis mass)^dim / volume.
        let axis_mass = 2.0 * Problem::gaussian(1).unwrap().true_value();
        for dim in [2usize, 5] {
            let p = Problem::gaussian(dim).unwrap();
            let product = axis_mass.powi(dim as i32) / 2f64.powi(dim as i32);
            assert!((p.true_value() - product).abs() / p.true_value() < 1e-13);
        }
    }

    #[test]
    fn integrand_is_component_times_prior() {
        let p = Problem::camel(3).unwrap();
        let x = [0.3, 0.5, 0.7];
        let h = p.integrand(&x);
        let f = p.component_integrand(&x);
        let pd = p.prior_density(&x);
        assert!((h - f * pd).abs() <= 1e-12 * h.abs().max(1.0));
    }

    #[test]
    fn integrand_nonnegative_on_benchmarks() {
        let mut rng = crate::seeding::rng_from(7);
        for id in ["gaussian", "camel", "quad"] {
            let p = Problem::by_id(id, 3).unwrap();
            for _ in 0..200 {
                let x = p.domain().sample_uniform(&mut rng);
                assert!(p.integrand(&x) >= 0.0);
            }
        }
    }

    #[test]
    fn prior_density_zero_outside_domain() {
        let p = Problem::gaussian(2).unwrap();
        assert_eq!(p.prior_density(&[1.5, 0.0]), 0.0);
        assert_eq!(p.prior_density(&[0.0, 0.0]), 0.25);
        let q = Problem::quad_camel(3).unwrap();
        assert_eq!(q.prior_density(&[1.0, 2.0, 3.0]), 1e-3);
    }

    #[test]
    fn camel_peak_height_matches_density_formula() {
        let p = Problem::camel(2).unwrap();
        let mu = [1.0 / 3.0, 1.0 / 3.0];
        let peak = (2.0 * PI * BENCH_SIGMA_SQ).powf(-1.0);
        let f = p.component_integrand(&mu);
        // Peak of its own mode plus the far mode's negligible tail.
        assert!(f >= peak && f < peak * (1.0 + 1e-6));
    }

    #[test]
    fn eval_counter_counts_each_integrand_call() {
        let p = Problem::gaussian(2).unwrap();
        assert_eq!(p.eval_count(), 0);
        for _ in 0..5 {
            p.integrand(&[0.1, 0.2]);
        }
        p.component_integrand(&[0.1, 0.2]);
        p.prior_density(&[0.1, 0.2]);
        assert_eq!(p.eval_count(), 5);
    }

    #[test]
    fn zero_dim_is_rejected() {
        assert!(matches!(Problem::gaussian(0), Err(TqError::InvalidDimension)));
        assert!(matches!(Problem::camel(0), Err(TqError::InvalidDimension)));
        assert!(matches!(Problem::quad_camel(0), Err(TqError::InvalidDimension)));
    }

    #[test]
    fn oracle_rejects_out_of_domain_modes() {
        let spec = GaussianMixtureSpec::new(vec![vec![3.0]], 0.01).unwrap();
        let domain = Domain::unit_cube(1).unwrap();
        assert!(matches!(
            true_value_oracle(&spec, &domain),
            Err(TqError::Unsupported(_))
        ));
    }

    #[test]
    fn single_mode_far_from_boundary_has_unit_mass() {
        // Domain spans more than 20 sigma on each side of the mode.
        let spec = GaussianMixtureSpec::new(vec![vec![0.0, 0.0]], 1.0).unwrap();
        let domain = Domain::cube(2, -25.0, 25.0).unwrap();
        assert!((spec.total_mass_in(&domain) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn invalid_domains_are_rejected() {
        assert!(Domain::new(vec![0.0], vec![0.0]).is_err());
        assert!(Domain::new(vec![1.0], vec![0.0]).is_err());
        assert!(Domain::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(Domain::new(vec![], vec![]).is_err());
    }
}
