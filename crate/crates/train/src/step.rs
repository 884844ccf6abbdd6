//! Batch loss construction on the tape and the gradient step.

use crate::{GranularityLosses, TrainConfig, TrainError, TrainExample};
use codegrain_core::{linalg, EncoderParams, Gradients, Granularity, NodeId, ScalarId, Tape};
use codegrain_represent::{represent_all_tape, AggregationMode};

/// The recorded loss of one batch.
pub struct BatchLoss {
    /// Combined objective scalar, the backward root.
    pub total: ScalarId,
    /// Loss scalar of every included example.
    pub example_losses: Vec<(Granularity, ScalarId)>,
    /// Per-granularity means (0 where the batch has no examples).
    pub means: GranularityLosses,
}

struct PreparedExample {
    granularity: Granularity,
    query: NodeId,
    positive: NodeId,
    function_negatives: Vec<NodeId>,
}

fn granularity_disabled(g: Granularity, cfg: &TrainConfig) -> bool {
    match g {
        Granularity::Function => false,
        Granularity::Block => cfg.disable_block_loss,
        Granularity::Statement => cfg.disable_statement_loss,
    }
}

/// Records the batch loss onto `tape`.
///
/// Per example: the positive is the best-scoring candidate (or the
/// largest under `disable_max_sim`), resolved against current values;
/// negatives are the other same-granularity positives in the batch
/// followed by the example's own same-function negatives.
pub fn build_batch_loss(
    tape: &mut Tape<'_>,
    batch: &[&TrainExample],
    cfg: &TrainConfig,
) -> Result<BatchLoss, TrainError> {
    if batch.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    let mode = if cfg.disable_hierarchy {
        AggregationMode::MeanPool
    } else {
        AggregationMode::Hierarchical
    };

    let mut prepared: Vec<PreparedExample> = Vec::new();
    for ex in batch {
        if granularity_disabled(ex.granularity, cfg) {
            continue;
        }
        let query_tokens: Vec<NodeId> = ex.query.ids.iter().map(|&id| tape.embed(id)).collect();
        let query = tape.mean(&query_tokens);
        let (nodes, _) = represent_all_tape(tape, &ex.snippets, &ex.hierarchy, &ex.seq, mode);

        let candidates: Vec<NodeId> = ex
            .candidate_ids
            .iter()
            .map(|id| *nodes.get(id).expect("candidates hold tokens"))
            .collect();
        let index = if cfg.disable_max_sim {
            candidates.len() - 1
        } else {
            let mut best = (f64::NEG_INFINITY, 0usize);
            for (i, &c) in candidates.iter().enumerate() {
                let s = linalg::dot(tape.value(query), tape.value(c));
                if s > best.0 {
                    best = (s, i);
                }
            }
            best.1
        };
        let function_negatives: Vec<NodeId> = ex
            .negative_ids
            .iter()
            .map(|id| *nodes.get(id).expect("negatives hold tokens"))
            .collect();
        prepared.push(PreparedExample {
            granularity: ex.granularity,
            query,
            positive: candidates[index],
            function_negatives,
        });
    }

    let mut example_losses: Vec<(Granularity, ScalarId)> = Vec::new();
    for i in 0..prepared.len() {
        let pos = tape.dot(prepared[i].query, prepared[i].positive);
        let mut negs: Vec<ScalarId> = Vec::new();
        for j in 0..prepared.len() {
            if j == i || prepared[j].granularity != prepared[i].granularity {
                continue;
            }
            negs.push(tape.dot(prepared[i].query, prepared[j].positive));
        }
        for k in 0..prepared[i].function_negatives.len() {
            let n = prepared[i].function_negatives[k];
            negs.push(tape.dot(prepared[i].query, n));
        }
        let loss = tape.info_nce(pos, &negs, cfg.tau);
        example_losses.push((prepared[i].granularity, loss));
    }

    let mut terms: Vec<(ScalarId, f64)> = Vec::new();
    let mut means = GranularityLosses::default();
    for (g, weight, slot) in [
        (Granularity::Function, 1.0, 0usize),
        (Granularity::Block, cfg.alpha, 1),
        (Granularity::Statement, cfg.beta, 2),
    ] {
        let ids: Vec<ScalarId> = example_losses
            .iter()
            .filter(|(eg, _)| *eg == g)
            .map(|(_, id)| *id)
            .collect();
        if ids.is_empty() {
            continue;
        }
        let w = 1.0 / ids.len() as f64;
        let mean_terms: Vec<(ScalarId, f64)> = ids.iter().map(|&id| (id, w)).collect();
        let mean = tape.weighted_sum(&mean_terms);
        let value = tape.scalar_value(mean);
        match slot {
            0 => means.function = value,
            1 => means.block = value,
            _ => means.statement = value,
        }
        terms.push((mean, weight));
    }
    let total = tape.weighted_sum(&terms);

    Ok(BatchLoss {
        total,
        example_losses,
        means,
    })
}

/// Batch loss values only, on a fresh tape.
pub fn batch_loss(
    batch: &[&TrainExample],
    params: &EncoderParams,
    cfg: &TrainConfig,
) -> Result<GranularityLosses, TrainError> {
    let mut tape = Tape::new(params);
    Ok(build_batch_loss(&mut tape, batch, cfg)?.means)
}

/// One gradient-descent update in place.
pub fn apply_sgd(params: &mut EncoderParams, grads: &Gradients, learning_rate: f64) {
    let dim = params.dim;
    for (id, row_grad) in &grads.embedding {
        let start = *id as usize * dim;
        for (p, g) in params.embedding[start..start + dim].iter_mut().zip(row_grad) {
            *p -= learning_rate * g;
        }
    }
    for (p, g) in params.agg_w.iter_mut().zip(&grads.agg_w) {
        *p -= learning_rate * g;
    }
    for (p, g) in params.ln_gain.iter_mut().zip(&grads.ln_gain) {
        *p -= learning_rate * g;
    }
    for (p, g) in params.ln_bias.iter_mut().zip(&grads.ln_bias) {
        *p -= learning_rate * g;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::info_nce;
    use crate::synth;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (Vec<TrainExample>, EncoderParams, TrainConfig) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (examples, params) = synth::instance(&mut rng, 8);
        let mut cfg = TrainConfig::default();
        cfg.dim = params.dim;
        cfg.tau = 0.1;
        (examples, params, cfg)
    }

    #[test]
    fn empty_batch_is_an_error() {
        let (_, params, cfg) = setup();
        assert!(matches!(
            batch_loss(&[], &params, &cfg),
            Err(TrainError::EmptyBatch)
        ));
    }

    #[test]
    fn function_only_batch_total_is_function_loss() {
        let (examples, params, cfg) = setup();
        let funcs: Vec<&TrainExample> = examples
            .iter()
            .filter(|e| e.granularity == Granularity::Function)
            .collect();
        assert!(!funcs.is_empty());
        let means = batch_loss(&funcs, &params, &cfg).unwrap();
        assert_eq!(means.block, 0.0);
        assert_eq!(means.statement, 0.0);
        assert_eq!(means.total(cfg.alpha, cfg.beta), means.function);
    }

    #[test]
    fn disabled_granularities_log_zero() {
        let (examples, params, mut cfg) = setup();
        cfg.disable_block_loss = true;
        cfg.disable_statement_loss = true;
        // A second function example so the pair act as in-batch negatives.
        let mut extra = examples
            .iter()
            .find(|e| e.granularity == Granularity::Function)
            .unwrap()
            .clone();
        extra.pair_id = "g:p9".into();
        extra.query = examples[0].query.clone();
        let mut batch: Vec<&TrainExample> = examples.iter().collect();
        batch.push(&extra);
        let means = batch_loss(&batch, &params, &cfg).unwrap();
        assert_eq!(means.block, 0.0);
        assert_eq!(means.statement, 0.0);
        assert!(means.function > 0.0);
    }

    #[test]
    fn disable_max_sim_matches_default_on_singletons() {
        let (examples, params, mut cfg) = setup();
        let singles: Vec<&TrainExample> = examples
            .iter()
            .filter(|e| e.candidate_ids.len() == 1)
            .collect();
        assert!(!singles.is_empty());
        let a = batch_loss(&singles, &params, &cfg).unwrap();
        cfg.disable_max_sim = true;
        let b = batch_loss(&singles, &params, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn doubling_alpha_doubles_the_block_contribution() {
        let (examples, params, mut cfg) = setup();
        let batch: Vec<&TrainExample> = examples.iter().collect();
        let base = batch_loss(&batch, &params, &cfg).unwrap();
        cfg.alpha *= 2.0;
        let bumped = batch_loss(&batch, &params, &cfg).unwrap();
        let base_total = base.total(1.0, cfg.beta);
        let bumped_total = bumped.total(2.0, cfg.beta);
        assert!((bumped_total - base_total - base.block).abs() < 1e-12);
    }

    #[test]
    fn two_example_batch_matches_brute_force() {
        // Recompute the loss from plain vectors: resolve each positive by
        // max score, then fold every other same-granularity positive and
        // the example's own negatives into its softmax.
        let (examples, params, cfg) = setup();
        let blocks: Vec<&TrainExample> = examples
            .iter()
            .filter(|e| e.granularity == Granularity::Block)
            .take(2)
            .collect();
        assert_eq!(blocks.len(), 2);
        let means = batch_loss(&blocks, &params, &cfg).unwrap();

        let encode = |ex: &TrainExample| {
            let matrix = codegrain_core::encode_tokens(&ex.seq, &params);
            let out = codegrain_represent::represent_all(
                &ex.snippets,
                &ex.hierarchy,
                &matrix,
                &ex.seq,
                &params,
                AggregationMode::Hierarchical,
            );
            let q_matrix = codegrain_core::encode_tokens(&ex.query, &params);
            let q: Vec<f64> = (0..params.dim)
                .map(|d| {
                    (0..ex.query.len()).map(|t| q_matrix.token_row(t)[d]).sum::<f64>()
                        / ex.query.len() as f64
                })
                .collect();
            (q, out)
        };
        let vec_of = |out: &codegrain_represent::RepresentOutcome, id: &str| {
            out.vectors
                .iter()
                .find(|v| v.snippet_id == id)
                .unwrap()
                .vector
                .clone()
        };

        let mut positives = Vec::new();
        let mut queries = Vec::new();
        let mut negatives = Vec::new();
        for ex in &blocks {
            let (q, out) = encode(ex);
            let scored: Vec<f64> = ex
                .candidate_ids
                .iter()
                .map(|id| linalg::dot(&q, &vec_of(&out, id)))
                .collect();
            let best = scored
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
                .unwrap()
                .0;
            positives.push(vec_of(&out, &ex.candidate_ids[best]));
            negatives.push(
                ex.negative_ids
                    .iter()
                    .map(|id| vec_of(&out, id))
                    .collect::<Vec<_>>(),
            );
            queries.push(q);
        }

        let mut losses = Vec::new();
        for i in 0..2 {
            let pos = linalg::dot(&queries[i], &positives[i]);
            let mut negs = vec![linalg::dot(&queries[i], &positives[1 - i])];
            for n in &negatives[i] {
                negs.push(linalg::dot(&queries[i], n));
            }
            losses.push(info_nce(pos, &negs, cfg.tau));
        }
        let want = (losses[0] + losses[1]) / 2.0;
        assert!((means.block - want).abs() < 1e-12);
    }

    #[test]
    fn sgd_moves_parameters_against_the_gradient() {
        let (examples, mut params, cfg) = setup();
        let batch: Vec<&TrainExample> = examples.iter().collect();
        let before = batch_loss(&batch, &params, &cfg)
            .unwrap()
            .total(cfg.alpha, cfg.beta);
        for _ in 0..5 {
            let mut tape = Tape::new(&params);
            let bl = build_batch_loss(&mut tape, &batch, &cfg).unwrap();
            let grads = tape.backward(bl.total);
            apply_sgd(&mut params, &grads, 0.05);
        }
        let after = batch_loss(&batch, &params, &cfg)
            .unwrap()
            .total(cfg.alpha, cfg.beta);
        assert!(after < before, "loss should drop: {before} -> {after}");
    }
}
