//! Index construction and match attribution. Both re-parse function
//! sources, so they live behind the `builder` feature; query-time search
//! needs neither the parser nor the autodiff tape.

use crate::{IndexEntry, IndexError, SearchIndex};
use codegrain_core::checkpoint::fingerprint;
use codegrain_core::linalg::norm;
use codegrain_core::tokenize::{DEFAULT_MAX_CODE_TOKENS, DEFAULT_MAX_QUERY_TOKENS};
use codegrain_core::{count_tokens, encode_tokens, tokenize, EncoderParams, Tape};
use codegrain_extract::{parse_and_segment, CorpusRecord, GrammarRegistry, SourceFunction};
use codegrain_represent::{represent_all, represent_all_tape, AggregationMode};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

fn function_entries(
    func: &SourceFunction,
    registry: &GrammarRegistry,
    params: &EncoderParams,
    mode: AggregationMode,
) -> Result<Vec<IndexEntry>, IndexError> {
    let grammar = registry.get(&func.language)?;
    let seg = parse_and_segment(func, grammar)?;
    let seq = tokenize(&func.source_text, DEFAULT_MAX_CODE_TOKENS, params.tokenizer_seed);
    let matrix = encode_tokens(&seq, params);
    let outcome = represent_all(&seg.snippets, &seg.hierarchy, &matrix, &seq, params, mode);
    let by_id: BTreeMap<&str, &codegrain_extract::Snippet> = seg
        .snippets
        .iter()
        .map(|s| (s.snippet_id.as_str(), s))
        .collect();
    Ok(outcome
        .vectors
        .into_iter()
        .map(|v| {
            let s = by_id[v.snippet_id.as_str()];
            IndexEntry {
                snippet_id: v.snippet_id,
                function_id: s.function_id.clone(),
                granularity: s.granularity,
                byte_start: s.byte_start,
                byte_end: s.byte_end,
                start_line: s.start_line,
                end_line: s.end_line,
                vector: v.vector,
            }
        })
        .collect())
}

/// Encodes every snippet of every function mentioned by `records` into a
/// searchable index stamped with the checkpoint fingerprint.
///
/// Records sharing a `function_id` must carry identical sources; the
/// function is parsed once. Snippets whose spans hold no tokens after
/// truncation are left out, mirroring training.
pub fn build_index(
    records: &[CorpusRecord],
    registry: &GrammarRegistry,
    params: &EncoderParams,
    mode: AggregationMode,
) -> Result<SearchIndex, IndexError> {
    let mut functions: Vec<SourceFunction> = Vec::new();
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        match seen.get(r.function_id.as_str()) {
            Some(&i) => {
                if functions[i].source_text != r.function_source {
                    return Err(IndexError::Format(format!(
                        "function {} appears with two different sources",
                        r.function_id
                    )));
                }
            }
            None => {
                seen.insert(&r.function_id, functions.len());
                functions.push(SourceFunction {
                    id: r.function_id.clone(),
                    language: r.language.clone(),
                    repo: String::new(),
                    path: String::new(),
                    source_text: r.function_source.clone(),
                });
            }
        }
    }

    let per_function: Vec<Result<Vec<IndexEntry>, IndexError>> = functions
        .par_iter()
        .map(|f| function_entries(f, registry, params, mode))
        .collect();
    let mut entries = Vec::new();
    for result in per_function {
        entries.extend(result?);
    }
    entries.sort_by(|a, b| a.snippet_id.cmp(&b.snippet_id));
    SearchIndex::new(params.dim, fingerprint(params), entries)
}

/// How much each snippet under the match contributed to its score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnippetContribution {
    pub snippet_id: String,
    /// Share of the total attribution mass, in [0, 1].
    pub weight: f64,
}

/// Explains a query-snippet match by differentiating the score through
/// the aggregation tree.
///
/// Each snippet feeding the target's vector is weighted by the norm of
/// the score's gradient at its node times the norm of its vector;
/// weights are normalized to sum to 1 and sorted heaviest first.
pub fn attribute_match(
    func: &SourceFunction,
    registry: &GrammarRegistry,
    params: &EncoderParams,
    query_text: &str,
    snippet_id: &str,
    mode: AggregationMode,
) -> Result<Vec<SnippetContribution>, IndexError> {
    if count_tokens(query_text) == 0 {
        return Err(IndexError::EmptyQuery);
    }
    let grammar = registry.get(&func.language)?;
    let seg = parse_and_segment(func, grammar)?;
    let seq = tokenize(&func.source_text, DEFAULT_MAX_CODE_TOKENS, params.tokenizer_seed);

    let mut tape = Tape::new(params);
    let (nodes, _) = represent_all_tape(&mut tape, &seg.snippets, &seg.hierarchy, &seq, mode);
    let target = *nodes
        .get(snippet_id)
        .ok_or_else(|| IndexError::SnippetMissing(snippet_id.to_string()))?;

    let q_seq = tokenize(query_text, DEFAULT_MAX_QUERY_TOKENS, params.tokenizer_seed);
    let q_tokens: Vec<_> = q_seq.ids.iter().map(|&id| tape.embed(id)).collect();
    let query = tape.mean(&q_tokens);
    let score = tape.dot(query, target);
    let (_, adjoints) = tape.backward_with_adjoints(score);

    let mut contributions: Vec<SnippetContribution> = nodes
        .iter()
        .filter_map(|(id, node)| {
            let adj = &adjoints[node.index()];
            if adj.is_empty() {
                return None;
            }
            Some(SnippetContribution {
                snippet_id: id.clone(),
                weight: norm(adj) * norm(tape.value(*node)),
            })
        })
        .collect();
    let total: f64 = contributions.iter().map(|c| c.weight).sum();
    if total > 0.0 {
        for c in contributions.iter_mut() {
            c.weight /= total;
        }
    }
    contributions.sort_by(|a, b| {
        b.weight
            .partial_cmp(&a.weight)
            .expect("weights are finite")
            .then_with(|| a.snippet_id.cmp(&b.snippet_id))
    });
    Ok(contributions)
}
