//! Subcommand bodies: file wiring around the library crates.

use crate::{
    AttributeArgs, Command, EvalArgs, ExtractArgs, FilterArgs, GradcheckArgs, IndexArgs,
    SearchArgs, TrainArgs, UsageError,
};
use anyhow::Context;
use codegrain_core::checkpoint::{fingerprint, fingerprint_hex};
use codegrain_core::{load_params, save_params};
use codegrain_extract::corpus::{
    extract_corpus, functions_from_dir, read_corpus_jsonl, read_input_jsonl, write_corpus_jsonl,
    CorpusRecord, ExtractStats,
};
use codegrain_extract::{GrammarRegistry, SourceFunction};
use codegrain_filter::{filter_corpus, FilterConfig, FilterReport};
use codegrain_index::{
    attribute_match, build_index, evaluate_mrr, load_index, read_eval_jsonl, save_index, search,
    AggregationMode, SearchHit, SnippetContribution,
};
use codegrain_train::{check_gradients, train, EpochMetrics, TrainConfig};
use serde::Serialize;
use std::fs;
use std::io::Write;

pub fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Extract(args) => run_extract(&args),
        Command::Filter(args) => run_filter(&args),
        Command::Train(args) => run_train(&args),
        Command::Index(args) => run_index(&args),
        Command::Search(args) => run_search(&args),
        Command::Eval(args) => run_eval(&args),
        Command::Attribute(args) => run_attribute(&args),
        Command::Gradcheck(args) => run_gradcheck(&args),
    }
}

fn emit<T: Serialize>(summary: &T) -> anyhow::Result<()> {
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer(&mut stdout, summary)?;
    writeln!(stdout)?;
    Ok(())
}

#[derive(Serialize)]
struct ExtractSummary {
    functions: usize,
    records: usize,
    output: String,
    stats: ExtractStats,
}

fn run_extract(args: &ExtractArgs) -> anyhow::Result<()> {
    let registry = GrammarRegistry::builtin();
    let functions: Vec<SourceFunction> = if args.input.is_dir() {
        functions_from_dir(&args.input, &registry)?
    } else {
        read_input_jsonl(&args.input)?.into_iter().map(SourceFunction::from).collect()
    };
    log::info!("extracting {} functions", functions.len());
    let (records, stats) = extract_corpus(&functions, &registry, args.max_candidates);
    write_corpus_jsonl(&args.output, &records)?;
    emit(&ExtractSummary {
        functions: functions.len(),
        records: records.len(),
        output: args.output.display().to_string(),
        stats,
    })
}

#[derive(Serialize)]
struct FilterSummary {
    input: usize,
    output: String,
    report: FilterReport,
}

fn run_filter(args: &FilterArgs) -> anyhow::Result<()> {
    let records = read_corpus_jsonl(&args.input)?;
    let mut config = FilterConfig::default();
    if let Some(min_tokens) = args.min_tokens {
        config.min_tokens = min_tokens;
    }
    if let Some(margin) = args.margin {
        config.margin = margin;
    }
    let (kept, report) = filter_corpus(&records, &config);
    write_corpus_jsonl(&args.output, &kept)?;
    emit(&FilterSummary {
        input: records.len(),
        output: args.output.display().to_string(),
        report,
    })
}

fn train_config(args: &TrainArgs) -> anyhow::Result<TrainConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| UsageError(format!("config {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| UsageError(format!("config {}: {e}", path.display())))?
        }
        None => TrainConfig::default(),
    };
    macro_rules! override_field {
        ($($field:ident),*) => {
            $(if let Some(value) = args.$field {
                cfg.$field = value;
            })*
        };
    }
    override_field!(
        dim, alpha, beta, tau, batch_size, learning_rate, epochs, seed,
        negatives_per_example, holdout_fraction, patience
    );
    cfg.disable_hierarchy |= args.disable_hierarchy;
    cfg.disable_max_sim |= args.disable_max_sim;
    cfg.disable_in_function_negatives |= args.disable_in_function_negatives;
    cfg.disable_block_loss |= args.disable_block_loss;
    cfg.disable_statement_loss |= args.disable_statement_loss;
    Ok(cfg)
}

#[derive(Serialize)]
struct TrainSummary {
    pairs: usize,
    held_out_pairs: usize,
    skipped_pairs: usize,
    epochs_run: usize,
    final_metrics: Option<EpochMetrics>,
    checkpoint: String,
    fingerprint: String,
}

fn run_train(args: &TrainArgs) -> anyhow::Result<()> {
    let records = read_corpus_jsonl(&args.corpus)?;
    let registry = GrammarRegistry::builtin();
    let cfg = train_config(args)?;
    log::info!("training on {} pairs for up to {} epochs", records.len(), cfg.epochs);
    let outcome = train(&records, &registry, &cfg)?;
    save_params(&args.checkpoint, &outcome.params)?;
    if let Some(path) = &args.metrics {
        let mut lines = String::new();
        for epoch in &outcome.metrics {
            lines.push_str(&serde_json::to_string(epoch)?);
            lines.push('\n');
        }
        fs::write(path, lines).with_context(|| format!("writing {}", path.display()))?;
    }
    emit(&TrainSummary {
        pairs: records.len(),
        held_out_pairs: outcome.held_out_pairs.len(),
        skipped_pairs: outcome.skipped_pairs.len(),
        epochs_run: outcome.metrics.len(),
        final_metrics: outcome.metrics.last().cloned(),
        checkpoint: args.checkpoint.display().to_string(),
        fingerprint: fingerprint_hex(&fingerprint(&outcome.params)),
    })
}

fn aggregation_mode(mean_pool: bool) -> AggregationMode {
    if mean_pool {
        AggregationMode::MeanPool
    } else {
        AggregationMode::Hierarchical
    }
}

#[derive(Serialize)]
struct IndexSummary {
    entries: usize,
    dim: usize,
    output: String,
    fingerprint: String,
}

fn run_index(args: &IndexArgs) -> anyhow::Result<()> {
    let records = read_corpus_jsonl(&args.corpus)?;
    let params = load_params(&args.checkpoint)?;
    let registry = GrammarRegistry::builtin();
    let index = build_index(&records, &registry, &params, aggregation_mode(args.mean_pool))?;
    save_index(&args.output, &index)?;
    emit(&IndexSummary {
        entries: index.len(),
        dim: index.dim(),
        output: args.output.display().to_string(),
        fingerprint: fingerprint_hex(index.fingerprint()),
    })
}

#[derive(Serialize)]
struct SearchSummary<'q> {
    query: &'q str,
    hits: Vec<SearchHit>,
}

fn run_search(args: &SearchArgs) -> anyhow::Result<()> {
    let index = load_index(&args.index)?;
    let params = load_params(&args.checkpoint)?;
    let hits = search(&index, &params, &args.query, args.k, args.granularity.map(Into::into))?;
    emit(&SearchSummary { query: &args.query, hits })
}

fn run_eval(args: &EvalArgs) -> anyhow::Result<()> {
    let index = load_index(&args.index)?;
    let params = load_params(&args.checkpoint)?;
    let queries = read_eval_jsonl(&args.queries)?;
    let report = evaluate_mrr(&index, &params, &queries)?;
    emit(&report)
}

#[derive(Serialize)]
struct AttributeSummary<'a> {
    snippet_id: &'a str,
    query: &'a str,
    contributions: Vec<SnippetContribution>,
}

/// Finds the corpus record owning `snippet_id`; ids are `{function}#{span}`.
fn function_of_snippet<'r>(
    records: &'r [CorpusRecord],
    snippet_id: &str,
) -> Option<&'r CorpusRecord> {
    let (function_id, _) = snippet_id.rsplit_once('#')?;
    records.iter().find(|r| r.function_id == function_id)
}

fn run_attribute(args: &AttributeArgs) -> anyhow::Result<()> {
    let records = read_corpus_jsonl(&args.corpus)?;
    let params = load_params(&args.checkpoint)?;
    let registry = GrammarRegistry::builtin();
    let record = function_of_snippet(&records, &args.snippet)
        .with_context(|| format!("no function for snippet {} in corpus", args.snippet))?;
    let func = SourceFunction {
        id: record.function_id.clone(),
        language: record.language.clone(),
        repo: String::new(),
        path: String::new(),
        source_text: record.function_source.clone(),
    };
    let contributions = attribute_match(
        &func,
        &registry,
        &params,
        &args.query,
        &args.snippet,
        aggregation_mode(args.mean_pool),
    )?;
    emit(&AttributeSummary {
        snippet_id: &args.snippet,
        query: &args.query,
        contributions,
    })
}

fn run_gradcheck(args: &GradcheckArgs) -> anyhow::Result<()> {
    let report = check_gradients(args.seed, args.instances, args.dim)?;
    emit(&report)?;
    if report.max_relative_error > args.tolerance {
        anyhow::bail!(
            "max relative error {:.3e} exceeds tolerance {:.3e}",
            report.max_relative_error,
            args.tolerance
        );
    }
    Ok(())
}
