//! The diagnose subcommand: one tree-quadrature run followed by the
//! reliability diagnostics, emitted as CSV files.

use std::fmt::Write as _;
use std::path::Path;

use treequad::diagnostics::{
    cumulative_curve, removal_curve_ordered, surrogate_sample, RemovalOrder,
};
use treequad::problems::Problem;
use treequad::sampling::sample_mixture_direct;
use treequad::{Result, TqError};

use crate::config::{ExperimentConfig, MethodId};
use crate::grid::{execute, run_seed};
use crate::report::write_file;

pub struct DiagnoseOptions {
    pub dim: usize,
    pub method: MethodId,
    /// Size of the independent posterior batch for the removal curve.
    pub diag_samples: usize,
    pub diag_seed: u64,
    /// Number of surrogate draws to emit.
    pub surrogate_samples: usize,
    /// What "largest container" means for the removal curve.
    pub removal_order: RemovalOrder,
}

/// Run the method once, compute the three diagnostics, and write
/// `removal_curve.csv`, `cumulative_curve.csv`, and
/// `surrogate_samples.csv` into `out_dir`.
pub fn diagnose(
    config: &ExperimentConfig,
    options: &DiagnoseOptions,
    out_dir: &Path,
) -> Result<()> {
    if !options.method.is_tree_method() {
        return Err(TqError::InvalidInput(format!(
            "diagnostics need a tree method, got {}",
            options.method
        )));
    }
    let seed = run_seed(config.root_seed, 0, 0, options.method);
    let run = execute(config, options.dim, options.method, seed)?;

    let problem = Problem::by_id(&config.problem, options.dim)?;
    let posterior = sample_mixture_direct(&problem, options.diag_samples, options.diag_seed)?;

    let removal = removal_curve_ordered(&run.result, &posterior, options.removal_order)?;
    let mut removal_csv = String::from("i,z_i,retained_fraction\n");
    for p in &removal.points {
        let _ = writeln!(removal_csv, "{},{},{}", p.removed, p.estimate, p.retained_fraction);
    }
    write_file(&out_dir.join("removal_curve.csv"), &removal_csv)?;

    let cumulative = cumulative_curve(&run.result)?;
    let mut cumulative_csv = String::from("k,cumulative\n");
    for p in &cumulative.points {
        let _ = writeln!(cumulative_csv, "{},{}", p.included, p.cumulative);
    }
    write_file(&out_dir.join("cumulative_curve.csv"), &cumulative_csv)?;

    let surrogate = surrogate_sample(&run.result, options.surrogate_samples, options.diag_seed)?;
    let mut surrogate_csv = (0..options.dim).fold(String::new(), |mut acc, d| {
        if d > 0 {
            acc.push(',');
        }
        let _ = write!(acc, "x{d}");
        acc
    });
    surrogate_csv.push_str(",leaf_id\n");
    for (x, id) in surrogate.locations.iter().zip(&surrogate.leaf_ids) {
        for (d, coord) in x.iter().enumerate() {
            if d > 0 {
                surrogate_csv.push(',');
            }
            let _ = write!(surrogate_csv, "{coord}");
        }
        let _ = writeln!(surrogate_csv, ",{id}");
    }
    write_file(&out_dir.join("surrogate_samples.csv"), &surrogate_csv)?;
    Ok(())
}
