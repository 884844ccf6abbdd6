//! Command line front end for the code search pipeline.
//!
//! Every subcommand reads and writes files named on the command line,
//! prints a single JSON summary to stdout, and logs progress to stderr.
//! Exit codes: 0 on success, 1 for usage or configuration mistakes, 2
//! for bad data or I/O failures.

mod commands;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use codegrain_core::Granularity;
use codegrain_train::TrainError;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "codegrain", version, about = "Multi-granularity code search over comment-aligned snippets")]
struct Cli {
    /// Worker threads for parallel stages; defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split source into functions and mine comment/snippet pairs.
    Extract(ExtractArgs),
    /// Drop low-signal pairs from an extracted corpus.
    Filter(FilterArgs),
    /// Train the encoder on a filtered corpus.
    Train(TrainArgs),
    /// Encode every snippet of a corpus into a search index.
    Index(IndexArgs),
    /// Run a text query against an index.
    Search(SearchArgs),
    /// Score an index against a judged query set.
    Eval(EvalArgs),
    /// Explain which snippets a query's match score flows through.
    Attribute(AttributeArgs),
    /// Compare analytic gradients against finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// Directory of source files, or a JSONL file of function records.
    #[arg(long)]
    input: PathBuf,
    /// Corpus JSONL to write.
    #[arg(long)]
    output: PathBuf,
    /// Longest candidate chain kept per comment.
    #[arg(long, default_value_t = 4)]
    max_candidates: usize,
}

#[derive(Debug, Args)]
struct FilterArgs {
    /// Corpus JSONL produced by `extract`.
    #[arg(long)]
    input: PathBuf,
    /// Filtered corpus JSONL to write.
    #[arg(long)]
    output: PathBuf,
    /// Minimum comment length in tokens.
    #[arg(long)]
    min_tokens: Option<usize>,
    /// Slack added to the snippet cosine in the reliance test.
    #[arg(long)]
    margin: Option<f64>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Filtered corpus JSONL to train on.
    #[arg(long)]
    corpus: PathBuf,
    /// Checkpoint file to write.
    #[arg(long)]
    checkpoint: PathBuf,
    /// JSON file of training hyperparameters; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Per-epoch metrics JSONL to write.
    #[arg(long)]
    metrics: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    negatives_per_example: Option<usize>,
    #[arg(long)]
    holdout_fraction: Option<f64>,
    #[arg(long)]
    patience: Option<usize>,
    /// Mean-pool every snippet instead of aggregating over the tree.
    #[arg(long)]
    disable_hierarchy: bool,
    /// Align to the largest candidate instead of the best-scoring one.
    #[arg(long)]
    disable_max_sim: bool,
    /// Train with in-batch negatives only.
    #[arg(long)]
    disable_in_function_negatives: bool,
    /// Drop the block-level loss term.
    #[arg(long)]
    disable_block_loss: bool,
    /// Drop the statement-level loss term.
    #[arg(long)]
    disable_statement_loss: bool,
}

#[derive(Debug, Args)]
struct IndexArgs {
    /// Corpus JSONL whose functions get encoded.
    #[arg(long)]
    corpus: PathBuf,
    /// Encoder checkpoint to encode with.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Index file to write.
    #[arg(long)]
    output: PathBuf,
    /// Mean-pool snippets instead of aggregating over the tree.
    #[arg(long)]
    mean_pool: bool,
}

#[derive(Debug, Args)]
struct SearchArgs {
    /// Index file produced by `index`.
    #[arg(long)]
    index: PathBuf,
    /// Checkpoint the index was built from.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Natural language query.
    #[arg(long)]
    query: String,
    /// Number of hits to return.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Restrict hits to one granularity.
    #[arg(long, value_enum)]
    granularity: Option<GranularityArg>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Index file produced by `index`.
    #[arg(long)]
    index: PathBuf,
    /// Checkpoint the index was built from.
    #[arg(long)]
    checkpoint: PathBuf,
    /// JSONL of judged queries: query_text, gold_snippet_id, granularity.
    #[arg(long)]
    queries: PathBuf,
}

#[derive(Debug, Args)]
struct AttributeArgs {
    /// Corpus JSONL containing the snippet's function.
    #[arg(long)]
    corpus: PathBuf,
    /// Encoder checkpoint to encode with.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Snippet whose match score gets explained.
    #[arg(long)]
    snippet: String,
    /// Natural language query.
    #[arg(long)]
    query: String,
    /// Mean-pool snippets instead of aggregating over the tree.
    #[arg(long)]
    mean_pool: bool,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random corpus instances to check.
    #[arg(long, default_value_t = 20)]
    instances: usize,
    /// Embedding dimension of the checked encoder.
    #[arg(long, default_value_t = 8)]
    dim: usize,
    /// Largest acceptable relative error.
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GranularityArg {
    Function,
    Block,
    Statement,
}

impl From<GranularityArg> for Granularity {
    fn from(arg: GranularityArg) -> Granularity {
        match arg {
            GranularityArg::Function => Granularity::Function,
            GranularityArg::Block => Granularity::Block,
            GranularityArg::Statement => Granularity::Statement,
        }
    }
}

/// A mistake in flags or config files rather than in the data.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    if let Some(TrainError::Config(_)) = err.downcast_ref::<TrainError>() {
        return 1;
    }
    2
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    if let Some(jobs) = cli.jobs {
        if let Err(err) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {err}");
            std::process::exit(1);
        }
    }
    if let Err(err) = commands::run(cli.command) {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}
