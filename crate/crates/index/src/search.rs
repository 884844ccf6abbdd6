//! Query-time ranking over an index.

use crate::{IndexEntry, IndexError, SearchIndex};
use codegrain_core::checkpoint::fingerprint;
use codegrain_core::linalg::dot;
use codegrain_core::{count_tokens, encode_query, EncoderParams, Granularity};
use serde::Serialize;

/// One ranked result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchHit {
    pub snippet_id: String,
    pub function_id: String,
    pub granularity: Granularity,
    pub score: f64,
    pub byte_start: usize,
    pub byte_end: usize,
    pub start_line: usize,
    pub end_line: usize,
}

impl SearchHit {
    fn from_entry(e: &IndexEntry, score: f64) -> SearchHit {
        SearchHit {
            snippet_id: e.snippet_id.clone(),
            function_id: e.function_id.clone(),
            granularity: e.granularity,
            score,
            byte_start: e.byte_start,
            byte_end: e.byte_end,
            start_line: e.start_line,
            end_line: e.end_line,
        }
    }
}

/// Refuses parameters the index was not built from.
fn check_fingerprint(index: &SearchIndex, params: &EncoderParams) -> Result<(), IndexError> {
    if &fingerprint(params) != index.fingerprint() {
        return Err(IndexError::FingerprintMismatch);
    }
    Ok(())
}

/// Ranks snippets against a natural-language query by dot-product score.
///
/// Scores sort descending; exact ties break toward the smaller snippet
/// id. `granularity` restricts the pool; `k` is clamped to it.
pub fn search(
    index: &SearchIndex,
    params: &EncoderParams,
    query_text: &str,
    k: usize,
    granularity: Option<Granularity>,
) -> Result<Vec<SearchHit>, IndexError> {
    check_fingerprint(index, params)?;
    if index.is_empty() {
        return Err(IndexError::EmptyIndex);
    }
    if count_tokens(query_text) == 0 {
        return Err(IndexError::EmptyQuery);
    }
    let query = encode_query(query_text, params);

    let mut hits: Vec<SearchHit> = index
        .entries()
        .iter()
        .filter(|e| granularity.is_none_or(|g| e.granularity == g))
        .map(|e| SearchHit::from_entry(e, dot(&query, &e.vector)))
        .collect();
    hits.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("scores are finite")
            .then_with(|| a.snippet_id.cmp(&b.snippet_id))
    });
    hits.truncate(k);
    Ok(hits)
}

/// Rank of `gold_snippet_id` among same-granularity entries, 1-based.
pub fn rank_of(
    index: &SearchIndex,
    params: &EncoderParams,
    query_text: &str,
    gold_snippet_id: &str,
) -> Result<usize, IndexError> {
    let gold = index
        .get(gold_snippet_id)
        .ok_or_else(|| IndexError::SnippetMissing(gold_snippet_id.to_string()))?;
    let hits = search(index, params, query_text, index.len(), Some(gold.granularity))?;
    let rank = hits
        .iter()
        .position(|h| h.snippet_id == gold_snippet_id)
        .expect("gold is in the filtered pool");
    Ok(rank + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::index_to_bytes;
    use crate::IndexEntry;

    /// Every token embeds to [1, 0], so any query pools to [1, 0] and an
    /// entry's score is exactly its first vector component.
    fn toy_params() -> EncoderParams {
        let mut p = EncoderParams::seeded(2, 0);
        for row in p.embedding.chunks_mut(2) {
            row[0] = 1.0;
            row[1] = 0.0;
        }
        p
    }

    fn entry(id: &str, granularity: Granularity, vector: Vec<f64>) -> IndexEntry {
        IndexEntry {
            snippet_id: id.to_string(),
            function_id: "f".to_string(),
            granularity,
            byte_start: 0,
            byte_end: 4,
            start_line: 1,
            end_line: 1,
            vector,
        }
    }

    fn toy_index(params: &EncoderParams) -> SearchIndex {
        SearchIndex::new(
            2,
            fingerprint(params),
            vec![
                entry("a", Granularity::Function, vec![3.0, 0.0]),
                entry("b", Granularity::Function, vec![1.0, 0.0]),
                entry("c", Granularity::Block, vec![2.0, 0.0]),
                entry("d", Granularity::Function, vec![1.0, 0.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn ranks_by_score_with_id_tie_break() {
        let params = toy_params();
        assert_eq!(encode_query("sort the rows", &params), vec![1.0, 0.0]);
        let index = toy_index(&params);
        let hits = search(&index, &params, "sort the rows", 10, None).unwrap();
        let ids: Vec<&str> = hits.iter().map(|h| h.snippet_id.as_str()).collect();
        // Scores 3, 2, 1, 1: the b/d tie breaks toward the smaller id.
        assert_eq!(ids, ["a", "c", "b", "d"]);
        assert_eq!(hits[0].score, 3.0);
        assert_eq!(hits[3].score, 1.0);
    }

    #[test]
    fn granularity_filter_and_k_clamp() {
        let params = toy_params();
        let index = toy_index(&params);
        let hits = search(&index, &params, "rows", 10, Some(Granularity::Block)).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].snippet_id, "c");
        let top = search(&index, &params, "rows", 2, None).unwrap();
        assert_eq!(top.len(), 2);
    }

    #[test]
    fn wrong_checkpoint_is_refused() {
        let params = toy_params();
        let index = toy_index(&params);
        let mut other = params.clone();
        other.embedding[0] += 1.0;
        assert!(matches!(
            search(&index, &other, "rows", 3, None),
            Err(IndexError::FingerprintMismatch)
        ));
    }

    #[test]
    fn empty_index_and_empty_query_are_errors() {
        let params = toy_params();
        let empty = SearchIndex::new(2, fingerprint(&params), vec![]).unwrap();
        assert!(matches!(
            search(&empty, &params, "rows", 3, None),
            Err(IndexError::EmptyIndex)
        ));
        let index = toy_index(&params);
        assert!(matches!(
            search(&index, &params, "   ", 3, None),
            Err(IndexError::EmptyQuery)
        ));
    }

    #[test]
    fn rank_of_counts_within_one_granularity() {
        let params = toy_params();
        let index = toy_index(&params);
        let rank_c = rank_of(&index, &params, "rows", "c").unwrap();
        assert_eq!(rank_c, 1, "c is the only block entry");
        assert!(matches!(
            rank_of(&index, &params, "rows", "zz"),
            Err(IndexError::SnippetMissing(id)) if id == "zz"
        ));
    }

    #[test]
    fn search_results_are_stable_across_serialization() {
        let params = toy_params();
        let index = toy_index(&params);
        let back = crate::format::index_from_bytes(&index_to_bytes(&index)).unwrap();
        let a = search(&index, &params, "count the rows", 4, None).unwrap();
        let b = search(&back, &params, "count the rows", 4, None).unwrap();
        assert_eq!(a, b);
    }
}
