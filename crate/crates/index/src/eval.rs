//! Retrieval evaluation: mean reciprocal rank over a gold query set.

use crate::search::rank_of;
use crate::{IndexError, SearchIndex};
use codegrain_core::{EncoderParams, Granularity};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

/// One gold judgment: this query should retrieve this snippet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub query_text: String,
    pub gold_snippet_id: String,
    pub granularity: Granularity,
}

/// Reciprocal-rank summary for one granularity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct GranularityMrr {
    pub queries: usize,
    pub mean_reciprocal_rank: f64,
}

/// Evaluation outcome across the whole set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MrrReport {
    pub queries: usize,
    pub mean_reciprocal_rank: f64,
    pub function: GranularityMrr,
    pub block: GranularityMrr,
    pub statement: GranularityMrr,
}

/// `mean(1 / rank)`; ranks are 1-based. Empty input scores 0.
pub fn mean_reciprocal_rank(ranks: &[usize]) -> f64 {
    if ranks.is_empty() {
        return 0.0;
    }
    let sum: f64 = ranks.iter().map(|r| 1.0 / *r as f64).sum();
    sum / ranks.len() as f64
}

/// Ranks every gold snippet among entries of its own granularity.
///
/// Errors if a gold id is missing from the index or its indexed
/// granularity disagrees with the record.
pub fn evaluate_mrr(
    index: &SearchIndex,
    params: &EncoderParams,
    records: &[EvalRecord],
) -> Result<MrrReport, IndexError> {
    let mut all: Vec<usize> = Vec::with_capacity(records.len());
    let mut per: [Vec<usize>; 3] = Default::default();
    for record in records {
        let entry = index
            .get(&record.gold_snippet_id)
            .ok_or_else(|| IndexError::SnippetMissing(record.gold_snippet_id.clone()))?;
        if entry.granularity != record.granularity {
            return Err(IndexError::Format(format!(
                "gold {} is indexed as {} but judged as {}",
                record.gold_snippet_id,
                entry.granularity.as_str(),
                record.granularity.as_str()
            )));
        }
        let rank = rank_of(index, params, &record.query_text, &record.gold_snippet_id)?;
        per[record.granularity.code() as usize].push(rank);
        all.push(rank);
    }
    let summary = |ranks: &Vec<usize>| GranularityMrr {
        queries: ranks.len(),
        mean_reciprocal_rank: mean_reciprocal_rank(ranks),
    };
    Ok(MrrReport {
        queries: all.len(),
        mean_reciprocal_rank: mean_reciprocal_rank(&all),
        function: summary(&per[0]),
        block: summary(&per[1]),
        statement: summary(&per[2]),
    })
}

/// Reads one [`EvalRecord`] per line, skipping blank lines.
pub fn read_eval_jsonl(path: &Path) -> Result<Vec<EvalRecord>, IndexError> {
    let text = fs::read_to_string(path)?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: EvalRecord = serde_json::from_str(line)
            .map_err(|e| IndexError::Format(format!("eval line {}: {e}", i + 1)))?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::IndexEntry;
    use codegrain_core::checkpoint::fingerprint;

    /// Every token embeds to [1, 0], so any query scores an entry by its
    /// first vector component alone and rankings are fully controlled.
    fn flat_params() -> EncoderParams {
        let mut p = EncoderParams::seeded(2, 0);
        for row in p.embedding.chunks_mut(2) {
            row[0] = 1.0;
            row[1] = 0.0;
        }
        p
    }

    fn entry(id: &str, granularity: Granularity, first: f64) -> IndexEntry {
        IndexEntry {
            snippet_id: id.to_string(),
            function_id: "f".to_string(),
            granularity,
            byte_start: 0,
            byte_end: 4,
            start_line: 1,
            end_line: 1,
            vector: vec![first, 0.0],
        }
    }

    fn ranked_index(params: &EncoderParams) -> SearchIndex {
        SearchIndex::new(
            2,
            fingerprint(params),
            vec![
                entry("fa", Granularity::Function, 4.0),
                entry("fb", Granularity::Function, 3.0),
                entry("fc", Granularity::Function, 2.0),
                entry("fd", Granularity::Function, 1.0),
                entry("g1", Granularity::Block, 2.0),
                entry("g2", Granularity::Block, 1.0),
            ],
        )
        .unwrap()
    }

    fn judgment(gold: &str, granularity: Granularity) -> EvalRecord {
        EvalRecord {
            query_text: "find the rows".into(),
            gold_snippet_id: gold.into(),
            granularity,
        }
    }

    #[test]
    fn mean_reciprocal_rank_of_known_ranks() {
        assert_eq!(mean_reciprocal_rank(&[]), 0.0);
        assert_eq!(mean_reciprocal_rank(&[1]), 1.0);
        let got = mean_reciprocal_rank(&[1, 2, 4]);
        assert!((got - 7.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn evaluate_ranks_within_granularity() {
        let params = flat_params();
        let index = ranked_index(&params);
        let records = vec![
            judgment("fa", Granularity::Function), // rank 1 of 4
            judgment("fb", Granularity::Function), // rank 2 of 4
            judgment("fd", Granularity::Function), // rank 4 of 4
            judgment("g2", Granularity::Block),    // rank 2 of 2
        ];
        let report = evaluate_mrr(&index, &params, &records).unwrap();
        assert_eq!(report.queries, 4);
        assert_eq!(report.function.queries, 3);
        assert!((report.function.mean_reciprocal_rank - 7.0 / 12.0).abs() < 1e-15);
        assert_eq!(report.block.queries, 1);
        assert!((report.block.mean_reciprocal_rank - 0.5).abs() < 1e-15);
        assert_eq!(report.statement.queries, 0);
        let want_overall = (1.0 + 0.5 + 0.25 + 0.5) / 4.0;
        assert!((report.mean_reciprocal_rank - want_overall).abs() < 1e-15);
    }

    #[test]
    fn missing_and_mislabeled_golds_are_errors() {
        let params = flat_params();
        let index = ranked_index(&params);
        let missing = vec![judgment("zz", Granularity::Function)];
        assert!(matches!(
            evaluate_mrr(&index, &params, &missing),
            Err(IndexError::SnippetMissing(id)) if id == "zz"
        ));
        let mislabeled = vec![judgment("g1", Granularity::Function)];
        assert!(matches!(
            evaluate_mrr(&index, &params, &mislabeled),
            Err(IndexError::Format(_))
        ));
    }

    #[test]
    fn eval_jsonl_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("eval.jsonl");
        let records = vec![
            judgment("fa", Granularity::Function),
            judgment("g1", Granularity::Block),
        ];
        let text: String = records
            .iter()
            .map(|r| serde_json::to_string(r).unwrap() + "\n")
            .collect();
        std::fs::write(&path, format!("{text}\n")).unwrap();
        assert_eq!(read_eval_jsonl(&path).unwrap(), records);
        std::fs::write(&path, "{broken").unwrap();
        assert!(matches!(
            read_eval_jsonl(&path),
            Err(IndexError::Format(msg)) if msg.starts_with("eval line 1")
        ));
    }
}
