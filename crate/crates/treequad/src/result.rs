//! The common result type returned by every integrator.

use crate::problems::Domain;

/// One leaf's contribution to the overall estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafContribution {
    pub leaf_id: u64,
    pub bounds: Domain,
    pub value: f64,
}

/// An integral estimate with full evaluation accounting.
///
/// `value` is always the sum of `contributions` (baselines report a single
/// whole-domain contribution). The three evaluation counters separate the
/// initial sampling cost, active-refinement cost, and per-leaf integration
/// cost so callers can enforce a total budget under either accounting.
#[derive(Debug, Clone)]
pub struct IntegralResult {
    pub value: f64,
    pub contributions: Vec<LeafContribution>,
    pub evals_sampling: u64,
    pub evals_active: u64,
    pub evals_leaf_integration: u64,
    /// Method/rule tag, e.g. `tq-s/minsse/random`.
    pub method: String,
    pub seed: u64,
    /// Per-run standard error where the method can estimate one (SMC,
    /// importance sampling, Vegas).
    pub std_error: Option<f64>,
    /// Effective sample size for importance sampling.
    pub ess: Option<f64>,
    pub warnings: Vec<String>,
}

impl IntegralResult {
    pub fn total_evals(&self) -> u64 {
        self.evals_sampling + self.evals_active + self.evals_leaf_integration
    }
}
