//! Experiment orchestration for the tree-quadrature benchmark CLI:
//! method-by-problem-by-dimension grids under a shared evaluation budget,
//! aggregation into Table-style reports, figure data, and post-hoc
//! diagnostics on single runs.

pub mod config;
pub mod diagnose;
pub mod figure;
pub mod grid;
pub mod report;

pub use config::{ExperimentConfig, MethodId};
pub use grid::{run_grid, RunRecord, RunStatus};
