use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use treequad_cli::config::{ExperimentConfig, MethodId};
use treequad_cli::diagnose::{diagnose, DiagnoseOptions};
use treequad_cli::figure::{figure_rows, figure_to_csv, figure_to_svg};
use treequad_cli::grid::{run_grid, RunStatus};
use treequad_cli::report::{
    parse_runs_csv, read_file, runs_to_csv, summarize, summary_to_csv, summary_to_text, write_file,
};

#[derive(Parser)]
#[command(
    name = "treequad",
    about = "Tree-quadrature benchmarks: run experiment grids, summarize them, emit figure data, and diagnose single runs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a (method x dimension x replicate) grid and write runs.csv,
    /// config.json, summary.csv, and summary.txt.
    Run(RunArgs),
    /// Recompute the summary table from a runs.csv.
    Summarize(SummarizeArgs),
    /// Emit per-dimension error quantiles (CSV) and an SVG chart.
    Figure(SummarizeArgs),
    /// Run one tree method and write the reliability diagnostics.
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct MethodOptions {
    /// Initial-sample generator for tree methods.
    #[arg(long, default_value = "mixture", value_parser = parse_sampler)]
    sampler: treequad::sampling::SamplerKind,

    /// Metropolis proposal scale.
    #[arg(long, default_value_t = 0.1)]
    metropolis_step: f64,

    /// Metropolis burn-in states (prepended to the requested batch size).
    #[arg(long, default_value_t = 0)]
    metropolis_burn_in: usize,

    /// Split rule for tree construction.
    #[arg(long, default_value = "minsse", value_parser = parse_split)]
    split: treequad::split::SplitRule,

    /// Stop splitting once a container holds at most this many samples.
    #[arg(long)]
    stop_max_samples: Option<usize>,

    /// Stop splitting once the value variance falls to this threshold.
    #[arg(long)]
    stop_variance: Option<f64>,

    /// Per-leaf integration rule.
    #[arg(long = "leaf-integral", default_value = "random", value_parser = parse_leaf)]
    leaf_integral: treequad::container::LeafRule,

    /// Fresh evaluations per leaf for the random rule.
    #[arg(long, default_value_t = 10)]
    leaf_evals: usize,

    /// Fraction of the tree-sample budget spent on active refinement.
    #[arg(long, default_value_t = 0.25)]
    active_fraction: f64,

    /// Whether leaf-integration evaluations count against the budget.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    budget_includes_leaf_evals: bool,

    #[arg(long, default_value_t = 50)]
    vegas_bins: usize,

    #[arg(long, default_value_t = 10)]
    vegas_iters: usize,

    #[arg(long, default_value_t = 1.5)]
    vegas_alpha: f64,

    /// Vegas point placement: stratified (classic) or importance.
    #[arg(long, default_value = "stratified", value_parser = parse_vegas_mode)]
    vegas_mode: treequad::baselines::VegasMode,
}

#[derive(Args)]
struct RunArgs {
    /// Problem id: gaussian, camel, or quad.
    #[arg(long)]
    problem: String,

    /// Comma-separated dimensions, e.g. 1,5,10.
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,

    /// Comma-separated methods: smc, is, vegas, tq-s, tq-a.
    #[arg(long = "methods", alias = "method", value_delimiter = ',', required = true, value_parser = parse_method)]
    methods: Vec<MethodId>,

    /// Total integrand-evaluation budget per run.
    #[arg(long, default_value_t = 12_000)]
    budget: u64,

    #[arg(long, default_value_t = 1)]
    replicates: usize,

    /// Root seed; per-run seeds are derived from it.
    #[arg(long = "seed", default_value_t = 0)]
    root_seed: u64,

    /// Parallel worker limit (0 = one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,

    /// Exit with code 2 if any run fails.
    #[arg(long, default_value_t = false)]
    strict: bool,

    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    #[command(flatten)]
    method_options: MethodOptions,
}

#[derive(Args)]
struct SummarizeArgs {
    /// A runs.csv produced by the run subcommand.
    #[arg(long)]
    input: PathBuf,

    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    problem: String,

    #[arg(long)]
    dim: usize,

    /// Tree method to diagnose: tq-s or tq-a.
    #[arg(long, default_value = "tq-s", value_parser = parse_method)]
    method: MethodId,

    #[arg(long, default_value_t = 12_000)]
    budget: u64,

    #[arg(long = "seed", default_value_t = 0)]
    root_seed: u64,

    /// Size of the independent posterior batch for the removal curve.
    #[arg(long, default_value_t = 10_000)]
    diag_samples: usize,

    /// Seed for the diagnostic batch and surrogate draws.
    #[arg(long, default_value_t = 1)]
    diag_seed: u64,

    /// Number of surrogate samples to emit.
    #[arg(long, default_value_t = 8_000)]
    surrogate_samples: usize,

    /// Removal-curve ranking: volume or contribution.
    #[arg(long, default_value = "volume", value_parser = parse_removal_order)]
    removal_order: treequad::diagnostics::RemovalOrder,

    #[arg(long, default_value = "out")]
    out: PathBuf,

    #[command(flatten)]
    method_options: MethodOptions,
}

fn parse_method(s: &str) -> Result<MethodId, String> {
    s.parse().map_err(|e: treequad::TqError| e.to_string())
}

fn parse_sampler(s: &str) -> Result<treequad::sampling::SamplerKind, String> {
    s.parse().map_err(|e: treequad::TqError| e.to_string())
}

fn parse_split(s: &str) -> Result<treequad::split::SplitRule, String> {
    s.parse().map_err(|e: treequad::TqError| e.to_string())
}

fn parse_leaf(s: &str) -> Result<treequad::container::LeafRule, String> {
    s.parse().map_err(|e: treequad::TqError| e.to_string())
}

fn parse_vegas_mode(s: &str) -> Result<treequad::baselines::VegasMode, String> {
    s.parse().map_err(|e: treequad::TqError| e.to_string())
}

fn parse_removal_order(s: &str) -> Result<treequad::diagnostics::RemovalOrder, String> {
    s.parse().map_err(|e: treequad::TqError| e.to_string())
}

impl MethodOptions {
    fn apply(&self, config: &mut ExperimentConfig) {
        config.sampler = self.sampler;
        config.metropolis_step = self.metropolis_step;
        config.metropolis_burn_in = self.metropolis_burn_in;
        config.split = self.split;
        config.stop_max_samples = self.stop_max_samples;
        config.stop_variance = self.stop_variance;
        config.leaf_rule = self.leaf_integral;
        config.leaf_evals = self.leaf_evals;
        config.active_fraction = self.active_fraction;
        config.budget_includes_leaf_evals = self.budget_includes_leaf_evals;
        config.vegas_bins = self.vegas_bins;
        config.vegas_iters = self.vegas_iters;
        config.vegas_alpha = self.vegas_alpha;
        config.vegas_mode = self.vegas_mode;
    }
}

fn cmd_run(args: &RunArgs) -> Result<ExitCode, treequad::TqError> {
    let mut config = ExperimentConfig {
        problem: args.problem.clone(),
        dims: args.dims.clone(),
        methods: args.methods.clone(),
        budget: args.budget,
        replicates: args.replicates,
        root_seed: args.root_seed,
        jobs: args.jobs,
        ..ExperimentConfig::default()
    };
    args.method_options.apply(&mut config);
    config.validate()?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| treequad::TqError::InvalidInput(format!("creating output dir: {e}")))?;

    let records = run_grid(&config)?;
    write_file(&args.out.join("runs.csv"), &runs_to_csv(&records))?;
    let config_json = serde_json::to_string_pretty(&config)
        .map_err(|e| treequad::TqError::InvalidInput(format!("serializing config: {e}")))?;
    write_file(&args.out.join("config.json"), &config_json)?;
    let cells = summarize(&records);
    write_file(&args.out.join("summary.csv"), &summary_to_csv(&cells))?;
    let text = summary_to_text(&cells);
    write_file(&args.out.join("summary.txt"), &text)?;
    print!("{text}");

    let failed = records.iter().filter(|r| r.status != RunStatus::Ok).count();
    if failed > 0 {
        eprintln!("warning: {failed} run(s) failed; see runs.csv");
        if args.strict {
            return Ok(ExitCode::from(2));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_summarize(args: &SummarizeArgs) -> Result<ExitCode, treequad::TqError> {
    let records = parse_runs_csv(&read_file(&args.input)?)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| treequad::TqError::InvalidInput(format!("creating output dir: {e}")))?;
    let cells = summarize(&records);
    write_file(&args.out.join("summary.csv"), &summary_to_csv(&cells))?;
    let text = summary_to_text(&cells);
    write_file(&args.out.join("summary.txt"), &text)?;
    print!("{text}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_figure(args: &SummarizeArgs) -> Result<ExitCode, treequad::TqError> {
    let records = parse_runs_csv(&read_file(&args.input)?)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| treequad::TqError::InvalidInput(format!("creating output dir: {e}")))?;
    let rows = figure_rows(&records);
    write_file(&args.out.join("figure.csv"), &figure_to_csv(&rows))?;
    write_file(&args.out.join("figure.svg"), &figure_to_svg(&rows))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_diagnose(args: &DiagnoseArgs) -> Result<ExitCode, treequad::TqError> {
    let mut config = ExperimentConfig {
        problem: args.problem.clone(),
        dims: vec![args.dim],
        methods: vec![args.method],
        budget: args.budget,
        replicates: 1,
        root_seed: args.root_seed,
        ..ExperimentConfig::default()
    };
    args.method_options.apply(&mut config);
    config.validate()?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| treequad::TqError::InvalidInput(format!("creating output dir: {e}")))?;
    let options = DiagnoseOptions {
        dim: args.dim,
        method: args.method,
        diag_samples: args.diag_samples,
        diag_seed: args.diag_seed,
        surrogate_samples: args.surrogate_samples,
        removal_order: args.removal_order,
    };
    diagnose(&config, &options, &args.out)?;
    println!(
        "wrote removal_curve.csv, cumulative_curve.csv, surrogate_samples.csv to {}",
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Summarize(args) => cmd_summarize(args),
        Command::Figure(args) => cmd_figure(args),
        Command::Diagnose(args) => cmd_diagnose(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
