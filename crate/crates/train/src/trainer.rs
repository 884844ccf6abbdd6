//! The training loop: epochs, batching, holdout evaluation, early stopping.

use crate::examples::{pair_seed, prepare_examples, TrainExample};
use crate::step::{apply_sgd, build_batch_loss};
use crate::{GranularityLosses, TrainConfig, TrainError};
use codegrain_core::{EncoderParams, Granularity, Tape};
use codegrain_extract::{CorpusRecord, GrammarRegistry};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

const HOLDOUT_SALT: u64 = 0x686f_6c64_6f75_7421;
const SHUFFLE_SALT: u64 = 0x7368_7566_666c_6521;

/// Mean losses of one epoch. Training losses are averaged over the
/// batches as they were seen; the held-out loss is computed after the
/// epoch's updates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub function_loss: f64,
    pub block_loss: f64,
    pub statement_loss: f64,
    pub total: f64,
    pub held_out_total: f64,
}

/// Trained parameters plus the per-epoch record.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: EncoderParams,
    pub metrics: Vec<EpochMetrics>,
    /// Pair ids held out of every update step.
    pub held_out_pairs: Vec<String>,
    /// Pair ids unusable for training (empty query or candidates).
    pub skipped_pairs: Vec<String>,
}

/// Deterministic holdout assignment, independent of corpus order.
///
/// FNV-1a diffuses trailing bytes weakly into the high bits, so the raw
/// hash would give pairs of the same function nearly identical draws and
/// hold out whole functions at a time. A 64-bit finalizer decorrelates
/// them before the high bits are taken.
fn is_held_out(cfg: &TrainConfig, pair_id: &str) -> bool {
    let mut h = pair_seed(cfg.seed ^ HOLDOUT_SALT, pair_id);
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^= h >> 33;
    ((h >> 11) as f64 / (1u64 << 53) as f64) < cfg.holdout_fraction
}

#[derive(Default)]
struct LossSums {
    sums: [f64; 3],
    counts: [usize; 3],
}

impl LossSums {
    fn add(&mut self, g: Granularity, value: f64) {
        let i = match g {
            Granularity::Function => 0,
            Granularity::Block => 1,
            Granularity::Statement => 2,
        };
        self.sums[i] += value;
        self.counts[i] += 1;
    }

    fn means(&self) -> GranularityLosses {
        let mean = |i: usize| {
            if self.counts[i] == 0 {
                0.0
            } else {
                self.sums[i] / self.counts[i] as f64
            }
        };
        GranularityLosses {
            function: mean(0),
            block: mean(1),
            statement: mean(2),
        }
    }
}

/// Loss of `examples` under frozen parameters, batched in fixed order.
fn evaluate_loss(
    examples: &[&TrainExample],
    params: &EncoderParams,
    cfg: &TrainConfig,
) -> Result<GranularityLosses, TrainError> {
    let mut sums = LossSums::default();
    for chunk in examples.chunks(cfg.batch_size) {
        let mut tape = Tape::new(params);
        let bl = build_batch_loss(&mut tape, chunk, cfg)?;
        for (g, id) in &bl.example_losses {
            sums.add(*g, tape.scalar_value(*id));
        }
    }
    Ok(sums.means())
}

/// Trains an encoder from scratch on `records`.
///
/// Every run with the same records and config is bit-identical: example
/// preparation, the holdout split, batch shuffling, and negative
/// sampling all derive from `cfg.seed`. With a holdout and nonzero
/// patience, the returned parameters are the snapshot with the best
/// held-out loss.
pub fn train(
    records: &[CorpusRecord],
    registry: &GrammarRegistry,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let mut params = EncoderParams::seeded(cfg.dim, cfg.seed);
    let corpus = prepare_examples(records, registry, params.tokenizer_seed, cfg)?;

    let mut train_set: Vec<&TrainExample> = Vec::new();
    let mut held_set: Vec<&TrainExample> = Vec::new();
    for ex in &corpus.examples {
        if is_held_out(cfg, &ex.pair_id) {
            held_set.push(ex);
        } else {
            train_set.push(ex);
        }
    }
    for g in Granularity::ALL {
        let disabled = (g == Granularity::Block && cfg.disable_block_loss)
            || (g == Granularity::Statement && cfg.disable_statement_loss);
        if disabled {
            continue;
        }
        if !train_set.iter().any(|e| e.granularity == g) {
            return Err(TrainError::DegenerateCorpus(format!(
                "no {} pairs in the training split",
                g.as_str()
            )));
        }
    }

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ SHUFFLE_SALT);
    let mut metrics: Vec<EpochMetrics> = Vec::new();
    let mut best: Option<(f64, EncoderParams)> = None;
    let mut stale = 0usize;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut sums = LossSums::default();
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&TrainExample> = chunk.iter().map(|&i| train_set[i]).collect();
            let mut tape = Tape::new(&params);
            let bl = build_batch_loss(&mut tape, &batch, cfg)?;
            for (g, id) in &bl.example_losses {
                sums.add(*g, tape.scalar_value(*id));
            }
            let grads = tape.backward(bl.total);
            drop(tape);
            apply_sgd(&mut params, &grads, cfg.learning_rate);
        }
        let train_means = sums.means();
        let held_out_total = if held_set.is_empty() {
            0.0
        } else {
            evaluate_loss(&held_set, &params, cfg)?.total(cfg.alpha, cfg.beta)
        };
        metrics.push(EpochMetrics {
            epoch,
            function_loss: train_means.function,
            block_loss: train_means.block,
            statement_loss: train_means.statement,
            total: train_means.total(cfg.alpha, cfg.beta),
            held_out_total,
        });

        if !held_set.is_empty() && cfg.patience > 0 {
            let improved = best.as_ref().is_none_or(|(b, _)| held_out_total < *b);
            if improved {
                best = Some((held_out_total, params.clone()));
                stale = 0;
            } else {
                stale += 1;
                if stale >= cfg.patience {
                    break;
                }
            }
        }
    }

    Ok(TrainOutcome {
        params: best.map(|(_, p)| p).unwrap_or(params),
        metrics,
        held_out_pairs: held_set.iter().map(|e| e.pair_id.clone()).collect(),
        skipped_pairs: corpus.skipped_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use codegrain_extract::{extract_corpus, SourceFunction};

    const SOURCES: [&str; 6] = [
        "def load_rows(path):\n    \"\"\"read rows from the file\"\"\"\n    out = []\n    with open(path) as fh:\n        # collect the stripped lines\n        for line in fh:\n            out.append(line.strip())\n    return out\n",
        "def scale_values(values, factor):\n    total = 0.0\n    for v in values:\n        total += v * factor  # accumulate the scaled value\n    return total\n",
        "def count_evens(nums):\n    \"\"\"count the even numbers\"\"\"\n    hits = 0\n    for n in nums:\n        if n % 2 == 0:\n            hits += 1  # bump the even counter\n    return hits\n",
        "def read_config(path):\n    data = {}\n    # parse the key value pairs\n    with open(path) as fh:\n        for line in fh:\n            key, value = line.split(\"=\", 1)\n            data[key] = value\n    return data\n",
        "def filter_names(names, prefix):\n    \"\"\"keep names with the prefix\"\"\"\n    kept = []\n    for name in names:\n        # match against the prefix\n        if name.startswith(prefix):\n            kept.append(name)\n    return kept\n",
        "def join_fields(row, sep):\n    parts = []\n    for field in row:\n        parts.append(str(field))  # stringify each field\n    return sep.join(parts)\n",
    ];

    fn toy_records() -> Vec<CorpusRecord> {
        let registry = GrammarRegistry::builtin();
        let functions: Vec<SourceFunction> = SOURCES
            .iter()
            .enumerate()
            .map(|(i, src)| SourceFunction {
                id: format!("toy.py:{i}:fn"),
                language: "python".into(),
                repo: "toy".into(),
                path: "toy.py".into(),
                source_text: (*src).to_string(),
            })
            .collect();
        let (records, stats) = extract_corpus(&functions, &registry, 4);
        assert_eq!(stats.functions_failed, 0);
        records
    }

    fn toy_config() -> TrainConfig {
        let mut cfg = TrainConfig::default();
        cfg.dim = 8;
        cfg.epochs = 3;
        cfg.batch_size = 4;
        cfg.holdout_fraction = 0.0;
        cfg.patience = 0;
        cfg
    }

    #[test]
    fn toy_corpus_covers_every_granularity() {
        let records = toy_records();
        for g in Granularity::ALL {
            assert!(
                records.iter().any(|r| r.granularity == g),
                "missing {g:?} pairs"
            );
        }
    }

    #[test]
    fn training_lowers_the_loss() {
        let records = toy_records();
        let registry = GrammarRegistry::builtin();
        let mut cfg = toy_config();
        cfg.epochs = 6;
        let outcome = train(&records, &registry, &cfg).unwrap();
        assert_eq!(outcome.metrics.len(), 6);
        let first = outcome.metrics.first().unwrap().total;
        let last = outcome.metrics.last().unwrap().total;
        assert!(last < first, "loss should drop: {first} -> {last}");
    }

    #[test]
    fn training_is_deterministic() {
        let records = toy_records();
        let registry = GrammarRegistry::builtin();
        let cfg = toy_config();
        let a = train(&records, &registry, &cfg).unwrap();
        let b = train(&records, &registry, &cfg).unwrap();
        assert_eq!(a.params.embedding, b.params.embedding);
        assert_eq!(a.params.agg_w, b.params.agg_w);
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.held_out_pairs, b.held_out_pairs);
    }

    #[test]
    fn metrics_serialize_with_per_granularity_names() {
        let records = toy_records();
        let registry = GrammarRegistry::builtin();
        let outcome = train(&records, &registry, &toy_config()).unwrap();
        let json = serde_json::to_value(&outcome.metrics[0]).unwrap();
        for key in [
            "epoch",
            "function_loss",
            "block_loss",
            "statement_loss",
            "total",
            "held_out_total",
        ] {
            assert!(json.get(key).is_some(), "missing key {key}");
        }
    }

    #[test]
    fn missing_granularity_is_a_degenerate_corpus() {
        let records: Vec<CorpusRecord> = toy_records()
            .into_iter()
            .filter(|r| r.granularity != Granularity::Statement)
            .collect();
        let registry = GrammarRegistry::builtin();
        let err = train(&records, &registry, &toy_config()).unwrap_err();
        assert!(matches!(err, TrainError::DegenerateCorpus(_)));

        // The same corpus trains once the statement term is ablated.
        let mut cfg = toy_config();
        cfg.disable_statement_loss = true;
        let outcome = train(&records, &registry, &cfg).unwrap();
        assert!(outcome.metrics.iter().all(|m| m.statement_loss == 0.0));
    }

    #[test]
    fn early_stopping_restores_the_best_snapshot() {
        let records = toy_records();
        let registry = GrammarRegistry::builtin();
        let mut cfg = toy_config();
        cfg.epochs = 30;
        cfg.holdout_fraction = 0.35;
        cfg.patience = 2;
        // A zero step keeps the held-out loss flat, so only the strict
        // improvement at epoch 0 counts and patience runs out right after.
        cfg.learning_rate = 1e-300;
        let outcome = train(&records, &registry, &cfg).unwrap();
        assert!(!outcome.held_out_pairs.is_empty());
        assert_eq!(outcome.metrics.len(), 1 + cfg.patience);
        let fresh = EncoderParams::seeded(cfg.dim, cfg.seed);
        let drift = outcome
            .params
            .agg_w
            .iter()
            .zip(&fresh.agg_w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        assert!(drift < 1e-290, "best snapshot should be the epoch 0 params");
    }

    #[test]
    fn holdout_draws_do_not_cluster_by_function() {
        let mut cfg = TrainConfig::default();
        cfg.holdout_fraction = 0.1;
        let mut held = 0usize;
        let mut whole_functions = 0usize;
        for f in 0..250 {
            let pair_held: Vec<bool> = (0..4)
                .map(|p| is_held_out(&cfg, &format!("task{f:03}:p{p}")))
                .collect();
            held += pair_held.iter().filter(|&&h| h).count();
            if pair_held.iter().all(|&h| h) {
                whole_functions += 1;
            }
        }
        let rate = held as f64 / 1000.0;
        assert!((0.05..=0.15).contains(&rate), "holdout rate {rate}");
        // Independent draws make an all-held function a 1e-4 event.
        assert_eq!(whole_functions, 0);
    }

    #[test]
    fn holdout_split_is_stable_and_order_free() {
        let mut records = toy_records();
        let registry = GrammarRegistry::builtin();
        let mut cfg = toy_config();
        cfg.holdout_fraction = 0.35;
        let a = train(&records, &registry, &cfg).unwrap();
        records.reverse();
        let b = train(&records, &registry, &cfg).unwrap();
        let mut held_a = a.held_out_pairs.clone();
        let mut held_b = b.held_out_pairs.clone();
        held_a.sort();
        held_b.sort();
        assert!(!held_a.is_empty());
        assert_eq!(held_a, held_b);
    }
}
