//! Experiment configuration: everything a grid run needs, echoed to JSON
//! alongside the results for reproducibility.

use serde::{Deserialize, Serialize};
use treequad::baselines::VegasMode;
use treequad::container::LeafRule;
use treequad::sampling::SamplerKind;
use treequad::seeding::hash_label;
use treequad::split::SplitRule;
use treequad::{Result, TqError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodId {
    Smc,
    Is,
    Vegas,
    TqS,
    TqA,
}

impl MethodId {
    pub fn id(self) -> &'static str {
        match self {
            MethodId::Smc => "smc",
            MethodId::Is => "is",
            MethodId::Vegas => "vegas",
            MethodId::TqS => "tq-s",
            MethodId::TqA => "tq-a",
        }
    }

    pub fn seed_hash(self) -> u64 {
        hash_label(self.id())
    }

    pub fn is_tree_method(self) -> bool {
        matches!(self, MethodId::TqS | MethodId::TqA)
    }
}

impl std::fmt::Display for MethodId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

impl std::str::FromStr for MethodId {
    type Err = TqError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smc" => Ok(MethodId::Smc),
            "is" => Ok(MethodId::Is),
            "vegas" => Ok(MethodId::Vegas),
            "tq-s" => Ok(MethodId::TqS),
            "tq-a" => Ok(MethodId::TqA),
            other => Err(TqError::InvalidInput(format!(
                "unknown method '{other}' (expected smc, is, vegas, tq-s, or tq-a)"
            ))),
        }
    }
}

/// One grid run: every knob, with the spec'd defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: String,
    pub dims: Vec<usize>,
    pub methods: Vec<MethodId>,
    /// Total evaluation budget per run.
    pub budget: u64,
    pub replicates: usize,
    pub root_seed: u64,
    #[serde(with = "sampler_kind_serde")]
    pub sampler: SamplerKind,
    pub metropolis_step: f64,
    pub metropolis_burn_in: usize,
    #[serde(with = "split_rule_serde")]
    pub split: SplitRule,
    pub stop_max_samples: Option<usize>,
    pub stop_variance: Option<f64>,
    #[serde(with = "leaf_rule_serde")]
    pub leaf_rule: LeafRule,
    /// Fresh evaluations per leaf for the random rule.
    pub leaf_evals: usize,
    /// Fraction of the tree-sample budget spent on active refinement.
    pub active_fraction: f64,
    /// When true, leaf-integration evaluations count against `budget` and
    /// the initial sample count is reduced to fit; when false, the whole
    /// budget goes to tree samples and leaf evaluations are extra.
    pub budget_includes_leaf_evals: bool,
    pub vegas_bins: usize,
    pub vegas_iters: usize,
    pub vegas_alpha: f64,
    #[serde(with = "vegas_mode_serde")]
    pub vegas_mode: VegasMode,
    /// Parallel worker limit; 0 means one per core.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem: "camel".into(),
            dims: vec![1],
            methods: vec![MethodId::TqS],
            budget: 12_000,
            replicates: 1,
            root_seed: 0,
            sampler: SamplerKind::MixtureDirect,
            metropolis_step: 0.1,
            metropolis_burn_in: 0,
            split: SplitRule::MinSse,
            stop_max_samples: None,
            stop_variance: None,
            leaf_rule: LeafRule::Random,
            leaf_evals: 10,
            active_fraction: 0.25,
            budget_includes_leaf_evals: true,
            vegas_bins: 50,
            vegas_iters: 10,
            vegas_alpha: 1.5,
            vegas_mode: VegasMode::Stratified,
            jobs: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        // Probe the problem id so typos fail before any run starts.
        treequad::problems::Problem::by_id(&self.problem, 1)?;
        if self.dims.is_empty() {
            return Err(TqError::InvalidInput("dims must be non-empty".into()));
        }
        if self.dims.contains(&0) {
            return Err(TqError::InvalidDimension);
        }
        if self.methods.is_empty() {
            return Err(TqError::InvalidInput("methods must be non-empty".into()));
        }
        if self.budget == 0 {
            return Err(TqError::InvalidInput("budget must be at least 1".into()));
        }
        if self.replicates == 0 {
            return Err(TqError::InvalidInput("replicates must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.active_fraction) {
            return Err(TqError::InvalidInput(format!(
                "active fraction must be in [0, 1), got {}",
                self.active_fraction
            )));
        }
        if self.leaf_evals == 0 {
            return Err(TqError::InvalidInput("leaf evaluations must be at least 1".into()));
        }
        if self.vegas_bins < 2 || self.vegas_iters == 0 {
            return Err(TqError::InvalidInput("vegas needs bins >= 2 and iterations >= 1".into()));
        }
        Ok(())
    }
}

macro_rules! str_enum_serde {
    ($module:ident, $ty:ty, $to:expr) => {
        mod $module {
            use serde::{Deserialize, Deserializer, Serialize, Serializer};

            pub fn serialize<S: Serializer>(v: &$ty, s: S) -> Result<S::Ok, S::Error> {
                let to: fn(&$ty) -> &'static str = $to;
                to(v).serialize(s)
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<$ty, D::Error> {
                let raw = String::deserialize(d)?;
                raw.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

str_enum_serde!(sampler_kind_serde, treequad::sampling::SamplerKind, |v| match v {
    treequad::sampling::SamplerKind::Uniform => "uniform",
    treequad::sampling::SamplerKind::MixtureDirect => "mixture",
    treequad::sampling::SamplerKind::Metropolis => "metropolis",
});

str_enum_serde!(split_rule_serde, treequad::split::SplitRule, |v| v.id());

str_enum_serde!(leaf_rule_serde, treequad::container::LeafRule, |v| v.id());

str_enum_serde!(vegas_mode_serde, treequad::baselines::VegasMode, |v| match v {
    treequad::baselines::VegasMode::ImportanceOnly => "importance",
    treequad::baselines::VegasMode::Stratified => "stratified",
});

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_json() {
        let config = ExperimentConfig {
            methods: vec![MethodId::Smc, MethodId::TqA],
            dims: vec![1, 5],
            ..ExperimentConfig::default()
        };
        let json = serde_json::to_string_pretty(&config).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.methods, config.methods);
        assert_eq!(back.dims, config.dims);
        assert_eq!(back.sampler, config.sampler);
    }

    #[test]
    fn validation_catches_bad_configs() {
        let ok = ExperimentConfig::default();
        assert!(ok.validate().is_ok());
        let cases = [
            ExperimentConfig { dims: vec![], ..ExperimentConfig::default() },
            ExperimentConfig { dims: vec![0], ..ExperimentConfig::default() },
            ExperimentConfig { problem: "nonesuch".into(), ..ExperimentConfig::default() },
            ExperimentConfig { replicates: 0, ..ExperimentConfig::default() },
            ExperimentConfig { active_fraction: 1.0, ..ExperimentConfig::default() },
            ExperimentConfig { budget: 0, ..ExperimentConfig::default() },
        ];
        for bad in cases {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn method_ids_parse_and_print() {
        for m in [MethodId::Smc, MethodId::Is, MethodId::Vegas, MethodId::TqS, MethodId::TqA] {
            assert_eq!(m.id().parse::<MethodId>().unwrap(), m);
        }
        assert!("bogus".parse::<MethodId>().is_err());
    }
}
