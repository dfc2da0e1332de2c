//! Tree quadrature: numerical integration with a regression-tree surrogate.
//!
//! The integration domain is recursively partitioned into axis-aligned
//! containers guided by a set of samples of the integrand. Each leaf
//! container is integrated independently and the per-leaf estimates are
//! summed. Construction from a fixed sample batch ([`tree::build_tq_s`])
//! can be followed by active refinement that spends a budget of fresh
//! integrand evaluations on the leaves with the widest observed value
//! range ([`tree::build_tq_a`]).
//!
//! The crate also ships reference integrators (simple Monte Carlo,
//! importance sampling, a separable adaptive-grid Vegas) in [`baselines`],
//! benchmark problems with analytic true values in [`problems`],
//! pluggable samplers in [`sampling`], and post-hoc reliability
//! diagnostics for fitted trees in [`diagnostics`].

pub mod baselines;
pub mod container;
pub mod diagnostics;
pub mod error;
pub mod problems;
pub mod result;
pub mod sampling;
pub mod seeding;
pub mod split;
pub mod tree;

pub use container::{AxialCut, Container, ContainerIntegral, LeafRule};
pub use error::{Result, TqError};
pub use problems::{Domain, GaussianMixtureSpec, Problem};
pub use result::{IntegralResult, LeafContribution};
pub use sampling::{SampleBatch, SamplerConfig, SamplerKind};
pub use split::{SplitDecision, SplitRule};
pub use tree::{StoppingCondition, Tree};
