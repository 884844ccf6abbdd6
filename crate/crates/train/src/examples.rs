//! Turning corpus records into training examples.
//!
//! Each record's function source is re-parsed so candidates resolve to
//! live snippets, queries are tokenized, and same-function negatives are
//! sampled once up front with a per-pair seeded rng.

use crate::negatives::select_in_function_negatives;
use crate::{TrainConfig, TrainError};
use codegrain_core::tokenize::{
    tokenize, DEFAULT_MAX_CODE_TOKENS, DEFAULT_MAX_QUERY_TOKENS,
};
use codegrain_core::{Granularity, TokenSeq};
use codegrain_extract::{
    parse_and_segment, CorpusRecord, GrammarRegistry, HierarchyIndex, Snippet, SourceFunction,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// One comment-snippet pair ready for loss computation.
#[derive(Debug, Clone)]
pub struct TrainExample {
    pub pair_id: String,
    pub granularity: Granularity,
    /// Tokenized comment text.
    pub query: TokenSeq,
    /// Tokenized function source.
    pub seq: TokenSeq,
    pub snippets: Vec<Snippet>,
    pub hierarchy: HierarchyIndex,
    /// Candidate snippet ids, innermost first; all hold tokens.
    pub candidate_ids: Vec<String>,
    /// Sampled same-function negatives; all hold tokens.
    pub negative_ids: Vec<String>,
}

/// Examples plus the pairs that could not be used.
#[derive(Debug, Default)]
pub struct PreparedCorpus {
    pub examples: Vec<TrainExample>,
    /// Pair ids skipped because the query or every candidate tokenized
    /// to nothing.
    pub skipped_pairs: Vec<String>,
}

/// Stable per-pair stream id: FNV-1a of the pair id mixed with the seed.
pub fn pair_seed(seed: u64, pair_id: &str) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = FNV_OFFSET ^ seed;
    for b in pair_id.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn build_example(
    record: &CorpusRecord,
    registry: &GrammarRegistry,
    tokenizer_seed: u64,
    cfg: &TrainConfig,
) -> Result<Option<TrainExample>, TrainError> {
    let grammar = registry.get(&record.language)?;
    let func = SourceFunction {
        id: record.function_id.clone(),
        language: record.language.clone(),
        repo: String::new(),
        path: String::new(),
        source_text: record.function_source.clone(),
    };
    let seg = parse_and_segment(&func, grammar)?;

    let seq = tokenize(&record.function_source, DEFAULT_MAX_CODE_TOKENS, tokenizer_seed);
    let query = tokenize(&record.comment_text, DEFAULT_MAX_QUERY_TOKENS, tokenizer_seed);
    if query.is_empty() {
        return Ok(None);
    }

    let has_tokens = |id: &str| {
        seg.snippets
            .iter()
            .find(|s| s.snippet_id == id)
            .map(|s| !seq.tokens_in_span(s.byte_start, s.byte_end).is_empty())
    };

    let mut candidate_ids = Vec::new();
    for span in &record.candidate_spans {
        match has_tokens(&span.snippet_id) {
            Some(true) => candidate_ids.push(span.snippet_id.clone()),
            Some(false) => {}
            None => {
                return Err(TrainError::CorpusMismatch {
                    pair_id: record.pair_id.clone(),
                    snippet_id: span.snippet_id.clone(),
                })
            }
        }
    }
    if candidate_ids.is_empty() {
        return Ok(None);
    }

    // The outermost candidate anchors negative sampling: anything
    // independent of it is independent of the whole chain.
    let negative_ids = if cfg.disable_in_function_negatives {
        Vec::new()
    } else {
        let anchor_id = candidate_ids.last().unwrap();
        let anchor = seg
            .snippets
            .iter()
            .find(|s| &s.snippet_id == anchor_id)
            .expect("candidate id resolved above");
        let mut rng = ChaCha8Rng::seed_from_u64(pair_seed(cfg.seed, &record.pair_id));
        select_in_function_negatives(
            anchor,
            &seg.snippets,
            &seg.hierarchy,
            cfg.negatives_per_example,
            &mut rng,
        )
        .into_iter()
        .filter(|id| has_tokens(id) == Some(true))
        .collect()
    };

    Ok(Some(TrainExample {
        pair_id: record.pair_id.clone(),
        granularity: record.granularity,
        query,
        seq,
        snippets: seg.snippets,
        hierarchy: seg.hierarchy,
        candidate_ids,
        negative_ids,
    }))
}

/// Builds examples for every record, in input order.
pub fn prepare_examples(
    records: &[CorpusRecord],
    registry: &GrammarRegistry,
    tokenizer_seed: u64,
    cfg: &TrainConfig,
) -> Result<PreparedCorpus, TrainError> {
    let built: Vec<(String, Result<Option<TrainExample>, TrainError>)> = records
        .par_iter()
        .map(|r| {
            (
                r.pair_id.clone(),
                build_example(r, registry, tokenizer_seed, cfg),
            )
        })
        .collect();

    let mut out = PreparedCorpus::default();
    for (pair_id, result) in built {
        match result? {
            Some(example) => out.examples.push(example),
            None => out.skipped_pairs.push(pair_id),
        }
    }
    Ok(out)
}
