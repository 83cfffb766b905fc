mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Retrosynthesis route planning and benchmark evaluation.
#[derive(Parser, Debug)]
#[command(name = "retroplan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search routes for one target and print them as JSON.
    Plan(PlanArgs),
    /// Search every target in a file, appending one JSON record per line.
    Batch(BatchArgs),
    /// Route and building-block accuracy of batch results against gold routes.
    EvalRoutes(EvalRoutesArgs),
    /// Top-n accuracy of a single-step predictor on test reactions.
    EvalSingleStep(EvalSingleStepArgs),
    /// Cluster each target's routes across models by tree edit distance.
    ClusterRoutes(ClusterRoutesArgs),
    /// Butina clustering of molecules on Morgan fingerprints.
    ClusterMols(ClusterMolsArgs),
    /// Aggregate metrics, route statistics and prior/rank pairs of batch results.
    Stats(StatsArgs),
    /// Mean and spread of the metrics over random subsets of batch results.
    Subsample(SubsampleArgs),
    /// Canonicalize a stock file and write its keys, sorted and deduplicated.
    ExportStock(ExportStockArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SearchArgs {
    /// JSON search config; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Start from the PaRoutes defaults (routes up to 10 reactions).
    #[arg(long)]
    pub paroutes: bool,
    /// Iteration limit.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Time limit per target in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Predictions requested per expansion.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Maximum route depth in reactions.
    #[arg(long)]
    pub max_depth: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct PredictorArgs {
    /// Single-step model: `table:<reactions.tsv>` or `cmd:<spawn command>`.
    #[arg(long, required_unless_present = "reactions", conflicts_with = "reactions")]
    pub predictor: Option<String>,
    /// Reaction table to use as the model (same as `--predictor table:<path>`).
    #[arg(long)]
    pub reactions: Option<PathBuf>,
    /// Seconds to wait for an external model reply.
    #[arg(long, default_value_t = 600.0)]
    pub timeout: f64,
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    /// Target molecule as SMILES.
    #[arg(long)]
    pub target: String,
    /// Building-block stock, one SMILES per line (`.gz` accepted).
    #[arg(long)]
    pub stock: PathBuf,
    #[command(flatten)]
    pub predictor: PredictorArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Routes to print, best first.
    #[arg(long, default_value_t = 50)]
    pub top_routes: usize,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BatchArgs {
    /// Target file, one SMILES per line.
    #[arg(long)]
    pub targets: PathBuf,
    /// Building-block stock, one SMILES per line (`.gz` accepted).
    #[arg(long)]
    pub stock: PathBuf,
    #[command(flatten)]
    pub predictor: PredictorArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Parallel searches, each with its own predictor handle.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Results file; existing records are kept and their targets skipped.
    #[arg(long)]
    pub out: PathBuf,
    /// Routes stored per record.
    #[arg(long, default_value_t = 50)]
    pub top_routes: usize,
    /// Also write every extracted route per target to this file.
    #[arg(long)]
    pub full_routes: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalRoutesArgs {
    /// Batch results (JSON lines).
    #[arg(long)]
    pub results: PathBuf,
    /// Gold routes: JSON array of route trees, one per target.
    #[arg(long)]
    pub gold: PathBuf,
    /// Comma-separated cutoffs.
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,10,50")]
    pub top_n: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalSingleStepArgs {
    /// Model under test: `table:<path>` or `cmd:<spawn command>`.
    #[arg(long)]
    pub predictor: String,
    /// Test reactions in the reaction-table format.
    #[arg(long)]
    pub reactions: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,10,50")]
    pub top_n: Vec<usize>,
    /// Seconds to wait for an external model reply.
    #[arg(long, default_value_t = 600.0)]
    pub timeout: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ClusterRoutesArgs {
    /// Batch results per model as `LABEL=PATH`; repeat for each model.
    #[arg(long = "results", required = true)]
    pub results: Vec<String>,
    /// Routes taken from each model per target.
    #[arg(long, default_value_t = 10)]
    pub top_routes: usize,
    /// Neighbor cutoff on normalized tree edit distance.
    #[arg(long, default_value_t = retroplan::routes::DEFAULT_ROUTE_CUTOFF)]
    pub cutoff: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ClusterMolsArgs {
    /// Molecules, one SMILES per line.
    #[arg(long)]
    pub targets: PathBuf,
    /// Neighbor cutoff on 1 − Tanimoto.
    #[arg(long, default_value_t = retroplan::fingerprint::DEFAULT_MOLECULE_CUTOFF)]
    pub cutoff: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[arg(long)]
    pub results: PathBuf,
    /// Routes per target used for route statistics and prior/rank pairs.
    #[arg(long, default_value_t = 10)]
    pub top_routes: usize,
    /// Include the (prior, rank) pairs of every reaction in the top routes.
    #[arg(long)]
    pub prior_rank: bool,
    /// Keep a random sample of this many prior/rank pairs.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SubsampleArgs {
    #[arg(long)]
    pub results: PathBuf,
    /// Records per sample.
    #[arg(long)]
    pub size: usize,
    #[arg(long, default_value_t = 1000)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExportStockArgs {
    /// Input stock, one SMILES per line (`.gz` accepted).
    #[arg(long)]
    pub stock: PathBuf,
    /// Read at most this many lines.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Bad invocation or missing input: exit 2.
    Usage(anyhow::Error),
    /// The inputs were read but the work failed: exit 1.
    Domain(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Domain(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Plan(a) => commands::plan(a),
        Command::Batch(a) => commands::batch(a),
        Command::EvalRoutes(a) => commands::eval_routes(a),
        Command::EvalSingleStep(a) => commands::eval_single_step(a),
        Command::ClusterRoutes(a) => commands::cluster_routes(a),
        Command::ClusterMols(a) => commands::cluster_mols(a),
        Command::Stats(a) => commands::stats(a),
        Command::Subsample(a) => commands::subsample(a),
        Command::ExportStock(a) => commands::export_stock(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            eprintln!("run with --help for usage");
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
