use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Debug, Parser)]
#[command(name = "indecision", version, about = "Fit and analyse indecision models of pairwise comparisons")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Seed for every random choice (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Key-value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Strict-mode probability formula: closed-form or process.
    #[arg(long, global = true)]
    strict_variant: Option<String>,
    /// Max-U indecision score: main-text or sum-form.
    #[arg(long, global = true)]
    maxu_variant: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a voter population and write its responses as CSV.
    Simulate(SimulateArgs),
    /// Fit one or more models to a dataset and write the results as JSON.
    Fit(FitArgs),
    /// Split a dataset, fit models and write ranking or group tables.
    Evaluate(EvaluateArgs),
    /// Majority/minority chi-squared tests on an indecisive and a strict group.
    HypothesisTest(HypothesisArgs),
    /// Check score argmax against the threshold response functions.
    EquivalenceCheck(EquivalenceArgs),
    /// Render stored JSON results as CSV tables.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    voters: usize,
    /// Queries per voter.
    #[arg(long, default_value_t = 40)]
    queries: usize,
    /// indecisive or strict.
    #[arg(long, default_value = "indecisive")]
    mode: String,
    /// Kind mix as `kind=probability` pairs, e.g. `min-delta=0.5,max-u=0.5`.
    #[arg(long, default_value = "min-delta=1")]
    kinds: String,
    /// Range of the strict coin probability q, `lo,hi`.
    #[arg(long, default_value = "0,1")]
    q_range: String,
    /// Ask every voter the same questions instead of fresh ones.
    #[arg(long)]
    shared_queries: bool,
    /// Name of the dataset file inside the output directory.
    #[arg(long, default_value = "dataset.csv")]
    output: String,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    /// Optional held-out dataset for test log-likelihoods.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Model kind to fit; repeat for several. Defaults to the configured list.
    #[arg(long = "model")]
    models: Vec<String>,
    /// Search budget (defaults by mode from the config).
    #[arg(long)]
    budget: Option<usize>,
    /// Fit a k-mixture with this many components instead.
    #[arg(long)]
    mixture: Option<usize>,
    /// Pin every mixture component to one kind.
    #[arg(long)]
    fixed_kind: Option<String>,
    /// Fit a voter mixture instead.
    #[arg(long, conflicts_with = "mixture")]
    vmixture: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    data: PathBuf,
    /// individual, representatives or population.
    #[arg(long, default_value = "individual")]
    paradigm: String,
    /// Training voters for the group paradigms.
    #[arg(long)]
    train_voters: Option<usize>,
    /// Single-model search budget.
    #[arg(long)]
    budget: Option<usize>,
    /// k-mixture search budget.
    #[arg(long)]
    mixture_budget: Option<usize>,
    /// Model kind to evaluate; repeat for several.
    #[arg(long = "model")]
    models: Vec<String>,
}

#[derive(Debug, Args)]
struct HypothesisArgs {
    /// Indecisive-group CSV.
    #[arg(long, requires = "strict")]
    indecisive: Option<PathBuf>,
    /// Strict-group CSV.
    #[arg(long, requires = "indecisive")]
    strict: Option<PathBuf>,
    /// Aggregate counts `maj,min,flips:maj,min` instead of datasets.
    #[arg(long, conflicts_with_all = ["indecisive", "strict"])]
    counts: Option<String>,
    /// Apply the Yates continuity correction.
    #[arg(long)]
    correction: bool,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Debug, Args)]
struct EquivalenceArgs {
    /// Random draws per model kind.
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Result JSON files written by `fit` or `evaluate`.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

fn configure_threads() -> Result<(), String> {
    let threads = match std::env::var("INDECISION_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("INDECISION_THREADS={v:?} is not a non-negative integer"))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(message) = configure_threads() {
        eprintln!("error: {message}");
        return ExitCode::from(1);
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
