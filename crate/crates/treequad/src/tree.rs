//! Tree construction and tree integration.
//!
//! `build_tq_s` fits the regression tree to a fixed sample batch: a FIFO
//! queue of containers is split by the chosen rule until every container
//! satisfies the stopping condition. `build_tq_a` runs the same first
//! phase, then spends a budget of fresh integrand evaluations refining the
//! leaves with the greatest estimated inaccuracy (the range of stored
//! values), managed through a priority queue. `integrate_tree` sums the
//! per-leaf container integrals.

use std::collections::{BinaryHeap, VecDeque};

use crate::container::{
    integrate_mean_y, integrate_median_y, integrate_midpoint, integrate_random, AxialCut,
    Container, ContainerIntegral, LeafRule,
};
use crate::error::{Result, TqError};
use crate::problems::{Domain, Problem};
use crate::result::{IntegralResult, LeafContribution};
use crate::sampling::SampleBatch;
use crate::seeding::{derive_seed, rng_from, stream};
use crate::split::SplitRule;

/// Safety valve against pathological split loops.
pub const DEFAULT_DEPTH_CAP: u32 = 200;

/// When a container is considered finished. A container stops when any
/// active criterion holds: it has at most `max_samples` samples, or the
/// population variance of its values is at most `y_variance`. The depth
/// cap always applies and retires a container with a logged warning.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingCondition {
    pub max_samples: Option<usize>,
    pub y_variance: Option<f64>,
    pub depth_cap: u32,
}

impl StoppingCondition {
    pub fn max_samples(k: usize) -> Self {
        StoppingCondition { max_samples: Some(k), y_variance: None, depth_cap: DEFAULT_DEPTH_CAP }
    }

    pub fn y_variance(v: f64) -> Self {
        StoppingCondition { max_samples: None, y_variance: Some(v), depth_cap: DEFAULT_DEPTH_CAP }
    }

    pub fn with_y_variance(mut self, v: f64) -> Self {
        self.y_variance = Some(v);
        self
    }

    pub fn with_depth_cap(mut self, cap: u32) -> Self {
        self.depth_cap = cap;
        self
    }

    /// Split-to-one-sample for low dimensions; above five dimensions also
    /// retire containers whose value variance is negligible relative to
    /// the initial value range, since deep trees in flat regions buy
    /// nothing.
    pub fn default_for(dim: usize, batch: &SampleBatch) -> Self {
        let base = StoppingCondition::max_samples(1);
        if dim <= 5 {
            return base;
        }
        let range = batch
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y)));
        let spread = (range.1 - range.0).max(0.0);
        base.with_y_variance(1e-10 * spread * spread)
    }

    pub fn is_met(&self, c: &Container) -> bool {
        if let Some(k) = self.max_samples {
            if c.len() <= k {
                return true;
            }
        }
        if let Some(v) = self.y_variance {
            if c.y_variance() <= v {
                return true;
            }
        }
        false
    }
}

/// Refinement priority: the inaccuracy heuristic with deterministic
/// tie-breaking by volume (larger first), then id (smaller first).
#[derive(Debug, Clone, Copy)]
pub struct Priority {
    pub inaccuracy: f64,
    pub volume: f64,
    pub id: u64,
}

impl Priority {
    pub fn of(c: &Container) -> Priority {
        Priority { inaccuracy: c.y_range(), volume: c.volume(), id: c.id }
    }

    /// The priority of a container retired as unsplittable.
    pub fn retired(c: &Container) -> Priority {
        Priority { inaccuracy: 0.0, volume: c.volume(), id: c.id }
    }
}

impl PartialEq for Priority {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}

impl Eq for Priority {}

impl PartialOrd for Priority {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Priority {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.inaccuracy
            .total_cmp(&other.inaccuracy)
            .then_with(|| self.volume.total_cmp(&other.volume))
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct QueueEntry {
    priority: Priority,
    container: Container,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.priority == other.priority
    }
}

impl Eq for QueueEntry {}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.priority.cmp(&other.priority)
    }
}

/// The fitted surrogate: the set of leaf containers tiling the domain,
/// plus an ordered split log sufficient to replay the construction.
#[derive(Debug, Clone)]
pub struct Tree {
    pub domain: Domain,
    pub leaves: Vec<Container>,
    pub split_rule: SplitRule,
    /// `(container id, cut)` in split order. The children of the k-th
    /// logged split always have ids `2k + 1` and `2k + 2`.
    pub build_log: Vec<(u64, AxialCut)>,
    pub total_samples: usize,
    pub warnings: Vec<String>,
}

impl Tree {
    /// Wrap externally constructed leaves (hand-built trees in tests and
    /// tools). The leaves are trusted to tile `domain`.
    pub fn from_leaves(domain: Domain, split_rule: SplitRule, leaves: Vec<Container>) -> Tree {
        let total_samples = leaves.iter().map(Container::len).sum();
        Tree { domain, leaves, split_rule, build_log: Vec::new(), total_samples, warnings: Vec::new() }
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }
}

struct Builder<'a> {
    rule: SplitRule,
    stop: &'a StoppingCondition,
    next_id: u64,
    build_log: Vec<(u64, AxialCut)>,
    warnings: Vec<String>,
    depth_cap_hits: u64,
}

impl<'a> Builder<'a> {
    fn new(rule: SplitRule, stop: &'a StoppingCondition) -> Self {
        Builder { rule, stop, next_id: 1, build_log: Vec::new(), warnings: Vec::new(), depth_cap_hits: 0 }
    }

    fn split(
        &mut self,
        container: Container,
        cut: AxialCut,
    ) -> Result<(Container, Container)> {
        let id = container.id;
        let (left, right) = container.split(&cut, self.next_id, self.next_id + 1)?;
        self.next_id += 2;
        self.build_log.push((id, cut));
        Ok((left, right))
    }

    fn finish_warnings(&mut self) {
        if self.depth_cap_hits > 0 {
            self.warnings.push(format!(
                "depth cap {} retired {} container(s)",
                self.stop.depth_cap, self.depth_cap_hits
            ));
        }
    }
}

fn root_container(batch: &SampleBatch, problem: &Problem) -> Result<Container> {
    if batch.is_empty() {
        return Err(TqError::EmptyInput);
    }
    for x in &batch.locations {
        if !problem.domain().contains(x) {
            return Err(TqError::InvalidInput(format!(
                "sample location {x:?} lies outside the problem domain"
            )));
        }
    }
    Ok(Container::new(
        problem.domain().clone(),
        batch.locations.clone(),
        batch.values.clone(),
        0,
        0,
    ))
}

/// Phase 1: FIFO splitting until every container satisfies `stop`.
/// Containers the rule cannot split are retired as leaves regardless.
fn build_fifo(
    root: Container,
    builder: &mut Builder,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<Vec<Container>> {
    let mut queue = VecDeque::new();
    let mut leaves = Vec::new();
    queue.push_back(root);
    while let Some(container) = queue.pop_front() {
        if builder.stop.is_met(&container) {
            leaves.push(container);
            continue;
        }
        if container.depth >= builder.stop.depth_cap {
            builder.depth_cap_hits += 1;
            leaves.push(container);
            continue;
        }
        match builder.rule.decide(&container, rng) {
            Ok(decision) => {
                let (left, right) = builder.split(container, decision.cut)?;
                queue.push_back(left);
                queue.push_back(right);
            }
            Err(TqError::DegenerateContainer(_)) => leaves.push(container),
            Err(e) => return Err(e),
        }
    }
    Ok(leaves)
}

/// Simple tree quadrature construction: fit the tree to the batch.
///
/// `seed` feeds the random split rule only; MinSSE and KD builds are
/// fully determined by the batch.
pub fn build_tq_s(
    batch: &SampleBatch,
    problem: &Problem,
    rule: SplitRule,
    stop: &StoppingCondition,
    seed: u64,
) -> Result<Tree> {
    let root = root_container(batch, problem)?;
    let mut builder = Builder::new(rule, stop);
    let mut rng = rng_from(derive_seed(seed, &[stream::BUILD]));
    let leaves = build_fifo(root, &mut builder, &mut rng)?;
    builder.finish_warnings();
    let total_samples = leaves.iter().map(Container::len).sum();
    debug_assert_eq!(total_samples, batch.len());
    Ok(Tree {
        domain: problem.domain().clone(),
        leaves,
        split_rule: rule,
        build_log: builder.build_log,
        total_samples,
        warnings: builder.warnings,
    })
}

/// Active tree quadrature construction: after the fixed-batch phase, pop
/// the highest-inaccuracy leaf, evaluate the integrand at one fresh
/// uniform point inside it, insert the sample, split, and push the
/// children — once per unit of `budget`. Containers the rule cannot split
/// are re-queued with zero inaccuracy; a later pop may succeed once they
/// have gained samples.
pub fn build_tq_a(
    batch: &SampleBatch,
    problem: &Problem,
    rule: SplitRule,
    stop: &StoppingCondition,
    budget: u64,
    seed: u64,
) -> Result<Tree> {
    let root = root_container(batch, problem)?;
    let mut builder = Builder::new(rule, stop);
    let mut build_rng = rng_from(derive_seed(seed, &[stream::BUILD]));
    let phase1 = build_fifo(root, &mut builder, &mut build_rng)?;

    let mut heap: BinaryHeap<QueueEntry> = phase1
        .into_iter()
        .map(|c| QueueEntry { priority: Priority::of(&c), container: c })
        .collect();
    let mut active_rng = rng_from(derive_seed(seed, &[stream::ACTIVE]));
    for _ in 0..budget {
        let Some(entry) = heap.pop() else { break };
        debug_assert!(
            heap.peek().is_none_or(|next| entry.priority >= next.priority),
            "popped priority must dominate the queue"
        );
        let mut container = entry.container;
        let x = container.bounds.sample_uniform(&mut active_rng);
        let y = problem.integrand(&x);
        container.xs.push(x);
        container.ys.push(y);
        if container.depth >= builder.stop.depth_cap {
            builder.depth_cap_hits += 1;
            let priority = Priority::retired(&container);
            heap.push(QueueEntry { priority, container });
            continue;
        }
        match builder.rule.decide(&container, &mut active_rng) {
            Ok(decision) => {
                let (left, right) = builder.split(container, decision.cut)?;
                heap.push(QueueEntry { priority: Priority::of(&left), container: left });
                heap.push(QueueEntry { priority: Priority::of(&right), container: right });
            }
            Err(TqError::DegenerateContainer(_)) => {
                let priority = Priority::retired(&container);
                heap.push(QueueEntry { priority, container });
            }
            Err(e) => return Err(e),
        }
    }
    builder.finish_warnings();
    let leaves: Vec<Container> = heap.into_iter().map(|e| e.container).collect();
    let total_samples = leaves.iter().map(Container::len).sum();
    Ok(Tree {
        domain: problem.domain().clone(),
        leaves,
        split_rule: rule,
        build_log: builder.build_log,
        total_samples,
        warnings: builder.warnings,
    })
}

/// Re-apply a recorded build log to the same batch. Reproduces a
/// `build_tq_s` tree exactly (active trees also insert fresh samples,
/// which the log does not carry).
pub fn replay(
    batch: &SampleBatch,
    problem: &Problem,
    rule: SplitRule,
    build_log: &[(u64, AxialCut)],
) -> Result<Tree> {
    let root = root_container(batch, problem)?;
    let mut alive: std::collections::HashMap<u64, Container> = std::collections::HashMap::new();
    alive.insert(0, root);
    for (k, (id, cut)) in build_log.iter().enumerate() {
        let container = alive.remove(id).ok_or_else(|| {
            TqError::InvalidInput(format!("build log refers to unknown container {id}"))
        })?;
        let left_id = 2 * k as u64 + 1;
        let right_id = 2 * k as u64 + 2;
        let (left, right) = container.split(cut, left_id, right_id)?;
        alive.insert(left_id, left);
        alive.insert(right_id, right);
    }
    let mut leaves: Vec<Container> = alive.into_values().collect();
    leaves.sort_by_key(|c| c.id);
    let total_samples = leaves.iter().map(Container::len).sum();
    Ok(Tree {
        domain: problem.domain().clone(),
        leaves,
        split_rule: rule,
        build_log: build_log.to_vec(),
        total_samples,
        warnings: Vec::new(),
    })
}

/// Per-leaf evaluation counts: either a uniform `m` per leaf, or a total
/// budget spread as evenly as possible (lowest leaf ids receive the
/// remainder, one extra evaluation each).
#[derive(Debug, Clone, Copy)]
pub enum LeafEvals {
    PerLeaf(usize),
    TotalBudget(u64),
}

fn leaf_eval_counts(tree: &Tree, evals: LeafEvals) -> Vec<usize> {
    match evals {
        LeafEvals::PerLeaf(m) => vec![m; tree.leaf_count()],
        LeafEvals::TotalBudget(total) => {
            let count = tree.leaf_count() as u64;
            if count == 0 {
                return Vec::new();
            }
            let base = (total / count).max(1) as usize;
            let extra = total.saturating_sub(base as u64 * count) as usize;
            let mut by_id: Vec<usize> = (0..tree.leaf_count()).collect();
            by_id.sort_by_key(|&i| tree.leaves[i].id);
            let mut counts = vec![base; tree.leaf_count()];
            for &i in by_id.iter().take(extra) {
                counts[i] += 1;
            }
            counts
        }
    }
}

/// Integrate every leaf with the chosen rule and sum the contributions.
///
/// The mean/median rules cannot price an empty leaf; such leaves fall
/// back to the midpoint rule and the fallback is recorded as a warning.
/// Random-rule evaluations for each leaf come from an independent stream
/// derived from `seed` and the leaf id, so the result does not depend on
/// leaf visit order.
pub fn integrate_tree(
    tree: &Tree,
    problem: &Problem,
    leaf_rule: LeafRule,
    m: usize,
    seed: u64,
) -> IntegralResult {
    integrate_tree_with(tree, problem, leaf_rule, LeafEvals::PerLeaf(m), seed)
}

/// [`integrate_tree`] with explicit control of the evaluation counts.
pub fn integrate_tree_with(
    tree: &Tree,
    problem: &Problem,
    leaf_rule: LeafRule,
    evals: LeafEvals,
    seed: u64,
) -> IntegralResult {
    let counts = leaf_eval_counts(tree, evals);
    let mut contributions = Vec::with_capacity(tree.leaf_count());
    let mut warnings = Vec::new();
    let mut evals_leaf = 0u64;
    let mut fallbacks = 0u64;
    let mut value = 0.0;
    for (leaf, &m_leaf) in tree.leaves.iter().zip(&counts) {
        let integral: ContainerIntegral = match leaf_rule {
            LeafRule::Random => {
                let mut rng = rng_from(derive_seed(seed, &[stream::LEAF, leaf.id]));
                integrate_random(leaf, problem, m_leaf, &mut rng)
            }
            LeafRule::Midpoint => integrate_midpoint(leaf, problem),
            LeafRule::MeanY | LeafRule::MedianY => {
                let direct = if leaf_rule == LeafRule::MeanY {
                    integrate_mean_y(leaf)
                } else {
                    integrate_median_y(leaf)
                };
                match direct {
                    Ok(integral) => integral,
                    Err(TqError::EmptyContainer) => {
                        fallbacks += 1;
                        integrate_midpoint(leaf, problem)
                    }
                    Err(_) => unreachable!("mean/median only fail on empty leaves"),
                }
            }
        };
        evals_leaf += integral.extra_evals;
        value += integral.value;
        contributions.push(LeafContribution {
            leaf_id: leaf.id,
            bounds: leaf.bounds.clone(),
            value: integral.value,
        });
    }
    if fallbacks > 0 {
        warnings.push(format!(
            "{fallbacks} empty leaf(s) integrated with the midpoint fallback"
        ));
    }
    IntegralResult {
        value,
        contributions,
        evals_sampling: 0,
        evals_active: 0,
        evals_leaf_integration: evals_leaf,
        method: format!("tq/{}/{}", tree.split_rule.id(), leaf_rule.id()),
        seed,
        std_error: None,
        ess: None,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample_mixture_direct, sample_uniform};

    fn tiling_holds(tree: &Tree) -> bool {
        let total: f64 = tree.leaves.iter().map(Container::volume).sum();
        let domain_volume = tree.domain.volume();
        (total - domain_volume).abs() <= 1e-10 * domain_volume
    }

    #[test]
    fn single_sample_batch_yields_single_leaf() {
        let p = Problem::camel(2).unwrap();
        let batch = sample_uniform(&p, 1, 3).unwrap();
        let tree =
            build_tq_s(&batch, &p, SplitRule::MinSse, &StoppingCondition::max_samples(1), 0)
                .unwrap();
        assert_eq!(tree.leaf_count(), 1);
        assert!(tree.build_log.is_empty());
        assert_eq!(tree.total_samples, 1);
    }

    #[test]
    fn empty_batch_is_rejected() {
        let p = Problem::camel(2).unwrap();
        let batch = SampleBatch { locations: vec![], values: vec![], warning: None };
        assert!(matches!(
            build_tq_s(&batch, &p, SplitRule::MinSse, &StoppingCondition::max_samples(1), 0),
            Err(TqError::EmptyInput)
        ));
    }

    #[test]
    fn max_samples_one_splits_to_single_sample_leaves() {
        let p = Problem::camel(2).unwrap();
        let batch = sample_mixture_direct(&p, 500, 11).unwrap();
        let stop = StoppingCondition::max_samples(1);
        let tree = build_tq_s(&batch, &p, SplitRule::MinSse, &stop, 0).unwrap();
        assert!(tiling_holds(&tree));
        assert_eq!(tree.total_samples, 500);
        for leaf in &tree.leaves {
            assert!(leaf.len() <= 1);
        }
        // MinSSE cuts always separate at least one sample per side, so
        // leaf count equals sample count with no empty leaves.
        assert_eq!(tree.leaf_count(), 500);
        assert_eq!(tree.build_log.len(), 499);
    }

    #[test]
    fn build_log_replays_to_the_same_tree() {
        let p = Problem::camel(2).unwrap();
        let batch = sample_mixture_direct(&p, 300, 5).unwrap();
        let stop = StoppingCondition::max_samples(2);
        for rule in [SplitRule::MinSse, SplitRule::Kd, SplitRule::RandomAxial] {
            let tree = build_tq_s(&batch, &p, rule, &stop, 9).unwrap();
            let replayed = replay(&batch, &p, rule, &tree.build_log).unwrap();
            assert_eq!(tree.leaf_count(), replayed.leaf_count());
            let mut original: Vec<&Container> = tree.leaves.iter().collect();
            original.sort_by_key(|c| c.id);
            for (a, b) in original.iter().zip(&replayed.leaves) {
                assert_eq!(a.id, b.id);
                assert_eq!(a.bounds, b.bounds);
                assert_eq!(a.xs, b.xs);
                assert_eq!(a.ys, b.ys);
            }
        }
    }

    #[test]
    fn rebuilding_is_bit_deterministic() {
        let p = Problem::camel(3).unwrap();
        let batch = sample_mixture_direct(&p, 400, 21).unwrap();
        let stop = StoppingCondition::max_samples(1);
        for rule in [SplitRule::MinSse, SplitRule::Kd, SplitRule::RandomAxial] {
            let a = build_tq_s(&batch, &p, rule, &stop, 7).unwrap();
            let b = build_tq_s(&batch, &p, rule, &stop, 7).unwrap();
            assert_eq!(a.build_log, b.build_log);
        }
        let a = build_tq_a(&batch, &p, SplitRule::MinSse, &stop, 150, 7).unwrap();
        let b = build_tq_a(&batch, &p, SplitRule::MinSse, &stop, 150, 7).unwrap();
        assert_eq!(a.build_log, b.build_log);
        assert_eq!(a.total_samples, b.total_samples);
    }

    #[test]
    fn tq_a_zero_budget_equals_tq_s() {
        let p = Problem::camel(2).unwrap();
        let batch = sample_mixture_direct(&p, 200, 13).unwrap();
        let stop = StoppingCondition::max_samples(1);
        let simple = build_tq_s(&batch, &p, SplitRule::MinSse, &stop, 1).unwrap();
        let active = build_tq_a(&batch, &p, SplitRule::MinSse, &stop, 0, 1).unwrap();
        assert_eq!(simple.build_log, active.build_log);
        assert_eq!(simple.total_samples, active.total_samples);
        let mut simple_ids: Vec<u64> = simple.leaves.iter().map(|c| c.id).collect();
        let mut active_ids: Vec<u64> = active.leaves.iter().map(|c| c.id).collect();
        simple_ids.sort_unstable();
        active_ids.sort_unstable();
        assert_eq!(simple_ids, active_ids);
    }

    #[test]
    fn tq_a_spends_exactly_its_budget() {
        let p = Problem::camel(5).unwrap();
        let batch = sample_mixture_direct(&p, 900, 3).unwrap();
        let stop = StoppingCondition::max_samples(1);
        let before = p.eval_count();
        let tree = build_tq_a(&batch, &p, SplitRule::MinSse, &stop, 300, 3).unwrap();
        assert_eq!(p.eval_count() - before, 300);
        assert_eq!(tree.total_samples, 1200);
        assert!(tiling_holds(&tree));
    }

    #[test]
    fn tq_a_tree_building_can_hit_a_12k_budget_exactly() {
        let p = Problem::camel(5).unwrap();
        let before = p.eval_count();
        let batch = sample_mixture_direct(&p, 9000, 1).unwrap();
        let stop = StoppingCondition::max_samples(1);
        let _tree = build_tq_a(&batch, &p, SplitRule::MinSse, &stop, 3000, 1).unwrap();
        assert_eq!(p.eval_count() - before, 12_000);
    }

    #[test]
    fn tq_a_constant_integrand_refines_by_volume_then_id() {
        let p = Problem::constant(Domain::unit_cube(1).unwrap(), 1.0);
        let locations = vec![vec![0.125], vec![0.375], vec![0.625], vec![0.875]];
        let values: Vec<f64> = locations.iter().map(|x| p.integrand(x)).collect();
        let batch = SampleBatch { locations, values, warning: None };
        // Phase 1 with max_samples(4) keeps the root whole; all
        // priorities are zero so refinement follows (volume, id).
        let stop = StoppingCondition::max_samples(4);
        let tree = build_tq_a(&batch, &p, SplitRule::MinSse, &stop, 1, 5).unwrap();
        // The single refinement step must have split the root (the only,
        // hence largest, container).
        assert_eq!(tree.build_log.len(), 1);
        assert_eq!(tree.build_log[0].0, 0);
    }

    #[test]
    fn stopping_conditions_bound_leaf_samples() {
        let p = Problem::camel(2).unwrap();
        let batch = sample_mixture_direct(&p, 600, 8).unwrap();
        for k in [1usize, 3, 10] {
            let stop = StoppingCondition::max_samples(k);
            let tree = build_tq_s(&batch, &p, SplitRule::MinSse, &stop, 0).unwrap();
            for leaf in &tree.leaves {
                assert!(leaf.len() <= k, "leaf with {} samples under max_samples({k})", leaf.len());
            }
        }
    }

    #[test]
    fn variance_stop_retires_flat_containers() {
        let p = Problem::camel(1).unwrap();
        let batch = sample_uniform(&p, 400, 2).unwrap();
        let spread = batch.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - batch.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let stop = StoppingCondition::max_samples(1).with_y_variance(1e-4 * spread * spread);
        let tree = build_tq_s(&batch, &p, SplitRule::MinSse, &stop, 0).unwrap();
        let full = build_tq_s(&batch, &p, SplitRule::MinSse, &StoppingCondition::max_samples(1), 0)
            .unwrap();
        assert!(tree.leaf_count() < full.leaf_count());
        for leaf in &tree.leaves {
            assert!(leaf.len() <= 1 || leaf.y_variance() <= 1e-4 * spread * spread);
        }
        assert!(tiling_holds(&tree));
    }

    #[test]
    fn depth_cap_retires_and_warns() {
        let p = Problem::camel(1).unwrap();
        let batch = sample_uniform(&p, 64, 4).unwrap();
        let stop = StoppingCondition::max_samples(1).with_depth_cap(2);
        let tree = build_tq_s(&batch, &p, SplitRule::MinSse, &stop, 0).unwrap();
        assert!(tree.leaves.iter().all(|c| c.depth <= 2));
        assert!(tree.warnings.iter().any(|w| w.contains("depth cap")));
        assert!(tiling_holds(&tree));
    }

    #[test]
    fn constant_integrand_integrates_exactly_for_every_leaf_rule() {
        let domain = Domain::cube(3, 0.0, 2.0).unwrap();
        let p = Problem::constant(domain, 4.0);
        let batch = sample_uniform(&p, 200, 6).unwrap();
        let stop = StoppingCondition::max_samples(1);
        let tree = build_tq_s(&batch, &p, SplitRule::Kd, &stop, 0).unwrap();
        let expected = 4.0 * 8.0;
        for rule in [LeafRule::Random, LeafRule::Midpoint, LeafRule::MeanY, LeafRule::MedianY] {
            let result = integrate_tree(&tree, &p, rule, 10, 17);
            assert!(
                (result.value - expected).abs() <= 1e-10 * expected,
                "{rule:?}: {} vs {expected}",
                result.value
            );
            let recomputed: f64 = result.contributions.iter().map(|c| c.value).sum();
            assert!((result.value - recomputed).abs() <= 1e-12 * expected);
        }
    }

    #[test]
    fn hand_built_two_leaf_tree_midpoint_is_exact_for_linear() {
        let p = Problem::from_fn("linear", Domain::unit_cube(1).unwrap(), |x| x[0], 0.5);
        let left = Container::new(Domain::new(vec![0.0], vec![0.5]).unwrap(), vec![], vec![], 1, 1);
        let right = Container::new(Domain::new(vec![0.5], vec![1.0]).unwrap(), vec![], vec![], 1, 2);
        let tree = Tree::from_leaves(Domain::unit_cube(1).unwrap(), SplitRule::MinSse, vec![left, right]);
        let result = integrate_tree(&tree, &p, LeafRule::Midpoint, 1, 0);
        assert_eq!(result.value, 0.25 * 0.5 + 0.75 * 0.5);
        assert_eq!(result.evals_leaf_integration, 2);
    }

    #[test]
    fn empty_leaves_fall_back_to_midpoint_for_mean_rule() {
        let p = Problem::camel(1).unwrap();
        let occupied = Container::new(
            Domain::new(vec![0.0], vec![0.5]).unwrap(),
            vec![vec![0.3]],
            vec![p.integrand(&[0.3])],
            1,
            1,
        );
        let empty = Container::new(Domain::new(vec![0.5], vec![1.0]).unwrap(), vec![], vec![], 1, 2);
        let tree = Tree::from_leaves(p.domain().clone(), SplitRule::MinSse, vec![occupied, empty]);
        let result = integrate_tree(&tree, &p, LeafRule::MeanY, 1, 0);
        assert_eq!(result.warnings.len(), 1);
        assert_eq!(result.evals_leaf_integration, 1);
        assert!(result.value.is_finite());
    }

    #[test]
    fn budgeted_leaf_evals_spend_exactly() {
        let p = Problem::camel(2).unwrap();
        let batch = sample_mixture_direct(&p, 100, 2).unwrap();
        let tree =
            build_tq_s(&batch, &p, SplitRule::MinSse, &StoppingCondition::max_samples(1), 0)
                .unwrap();
        let before = p.eval_count();
        let result =
            integrate_tree_with(&tree, &p, LeafRule::Random, LeafEvals::TotalBudget(1037), 3);
        assert_eq!(result.evals_leaf_integration, 1037);
        assert_eq!(p.eval_count() - before, 1037);
    }

    #[test]
    fn integration_result_is_independent_of_leaf_order() {
        let p = Problem::camel(2).unwrap();
        let batch = sample_mixture_direct(&p, 150, 9).unwrap();
        let tree =
            build_tq_s(&batch, &p, SplitRule::MinSse, &StoppingCondition::max_samples(1), 0)
                .unwrap();
        let mut reversed = tree.clone();
        reversed.leaves.reverse();
        let a = integrate_tree(&tree, &p, LeafRule::Random, 5, 41);
        let b = integrate_tree(&reversed, &p, LeafRule::Random, 5, 41);
        let sum_a: f64 = a.contributions.iter().map(|c| c.value).sum();
        let sum_b: f64 = b.contributions.iter().map(|c| c.value).sum();
        assert!((sum_a - sum_b).abs() <= 1e-12 * sum_a.abs().max(1.0));
        // Per-leaf streams: identical contributions keyed by leaf id.
        for c in &a.contributions {
            let twin = b.contributions.iter().find(|d| d.leaf_id == c.leaf_id).unwrap();
            assert_eq!(c.value, twin.value);
        }
    }

    #[test]
    fn priority_ordering_prefers_range_then_volume_then_id() {
        let big = Priority { inaccuracy: 2.0, volume: 0.1, id: 7 };
        let small = Priority { inaccuracy: 1.0, volume: 0.9, id: 1 };
        assert!(big > small);
        let wide = Priority { inaccuracy: 1.0, volume: 0.9, id: 9 };
        let narrow = Priority { inaccuracy: 1.0, volume: 0.2, id: 1 };
        assert!(wide > narrow);
        let early = Priority { inaccuracy: 1.0, volume: 0.5, id: 1 };
        let late = Priority { inaccuracy: 1.0, volume: 0.5, id: 2 };
        assert!(early > late);
    }
}
