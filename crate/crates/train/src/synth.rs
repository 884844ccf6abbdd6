//! Synthetic instances for gradient checks and step tests.
//!
//! A fixed two-level tree over a word grid, with random vocabulary,
//! queries, and parameters. No parser involved: snippets are laid out
//! directly so every aggregation path is exercised with known shapes.

use crate::TrainExample;
use codegrain_core::tokenize::{
    tokenize, DEFAULT_MAX_CODE_TOKENS, DEFAULT_MAX_QUERY_TOKENS, DEFAULT_TOKENIZER_SEED,
};
use codegrain_core::{EncoderParams, Granularity};
use codegrain_extract::{HierarchyIndex, Snippet};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Words on the grid: "w00" style, 3 bytes plus one separating space.
const WORD_STRIDE: usize = 4;
const WORD_COUNT: usize = 14;
const VOCAB_WORDS: usize = 40;

fn word_span(lo: usize, hi: usize) -> (usize, usize) {
    (lo * WORD_STRIDE, hi * WORD_STRIDE - 1)
}

fn snip(id: &str, granularity: Granularity, words: (usize, usize), parent: Option<&str>) -> Snippet {
    let (byte_start, byte_end) = word_span(words.0, words.1);
    Snippet {
        snippet_id: id.to_string(),
        function_id: "g".to_string(),
        granularity,
        byte_start,
        byte_end,
        start_line: 1,
        end_line: 1,
        parent_id: parent.map(str::to_string),
    }
}

fn random_words(rng: &mut ChaCha8Rng, n: usize) -> String {
    let words: Vec<String> = (0..n)
        .map(|_| format!("w{:02}", rng.random_range(0..VOCAB_WORDS)))
        .collect();
    words.join(" ")
}

/// A four-example batch over one synthetic function:
/// a two-candidate block chain, a statement, the function itself, and a
/// second block. Parameters are randomized away from the mean-pooling
/// init so every backward path carries signal.
pub(crate) fn instance(rng: &mut ChaCha8Rng, dim: usize) -> (Vec<TrainExample>, EncoderParams) {
    let mut params = EncoderParams::seeded(dim, rng.random());
    for w in params.agg_w.iter_mut() {
        *w = (rng.random::<f64>() * 2.0 - 1.0) * 0.3;
    }
    for g in params.ln_gain.iter_mut() {
        *g = 1.0 + (rng.random::<f64>() * 2.0 - 1.0) * 0.2;
    }
    for b in params.ln_bias.iter_mut() {
        *b = (rng.random::<f64>() * 2.0 - 1.0) * 0.1;
    }

    let text = random_words(rng, WORD_COUNT);
    let seq = tokenize(&text, DEFAULT_MAX_CODE_TOKENS, DEFAULT_TOKENIZER_SEED);

    let snippets = vec![
        snip("g", Granularity::Function, (0, WORD_COUNT), None),
        snip("g:s0", Granularity::Statement, (1, 2), Some("g")),
        snip("g:b_out", Granularity::Block, (2, 10), Some("g")),
        snip("g:b_in", Granularity::Block, (3, 8), Some("g:b_out")),
        snip("g:sa", Granularity::Statement, (4, 6), Some("g:b_in")),
        snip("g:sb", Granularity::Statement, (6, 8), Some("g:b_in")),
        snip("g:sc", Granularity::Statement, (8, 10), Some("g:b_out")),
        snip("g:b2", Granularity::Block, (10, 13), Some("g")),
        snip("g:sd", Granularity::Statement, (11, 13), Some("g:b2")),
    ];
    let hierarchy = HierarchyIndex::from_snippets(&snippets);

    let spec: [(&str, Granularity, &[&str], &[&str]); 4] = [
        ("g:p0", Granularity::Block, &["g:b_in", "g:b_out"], &["g:b2"]),
        ("g:p1", Granularity::Statement, &["g:sa"], &["g:sc", "g:sd"]),
        ("g:p2", Granularity::Function, &["g"], &[]),
        ("g:p3", Granularity::Block, &["g:b2"], &["g:b_out"]),
    ];
    let examples = spec
        .into_iter()
        .map(|(pair_id, granularity, candidates, negatives)| {
            let query_len = rng.random_range(2..=4);
            let query_text = random_words(rng, query_len);
            TrainExample {
                pair_id: pair_id.to_string(),
                granularity,
                query: tokenize(&query_text, DEFAULT_MAX_QUERY_TOKENS, DEFAULT_TOKENIZER_SEED),
                seq: seq.clone(),
                snippets: snippets.clone(),
                hierarchy: hierarchy.clone(),
                candidate_ids: candidates.iter().map(|s| s.to_string()).collect(),
                negative_ids: negatives.iter().map(|s| s.to_string()).collect(),
            }
        })
        .collect();
    (examples, params)
}
