//! Noise filtering for comment-code alignment pairs.
//!
//! Two stages: cheap regex rules on the comment text (URLs, tool chatter,
//! too-short comments), then a TF-IDF reliance test that drops comments
//! better explained by the rest of their function than by their own
//! snippet. Rules apply in a fixed precedence and each dropped pair is
//! attributed to exactly one rule.

mod report;
mod rules;
mod tfidf;

pub use report::FilterReport;
pub use rules::{Decision, DropReason, FilterConfig, RegexRules};
pub use tfidf::{cosine, TfidfModel};

use codegrain_extract::CorpusRecord;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FilterError {
    /// A TF-IDF model needs at least one document.
    #[error("cannot build a tf-idf model from an empty corpus")]
    EmptyCorpus,
}

/// Applies the reliance test to one record.
///
/// The snippet side takes the best cosine over the candidate chain; the
/// "rest" side is the function with that winning candidate excised. The
/// pair is dropped when the snippet loses by more than `margin`.
pub fn reliance_filter(record: &CorpusRecord, model: &TfidfModel, margin: f64) -> Decision {
    let comment = model.vectorize(&record.comment_text);
    let mut best: Option<(f64, usize)> = None;
    for (i, span) in record.candidate_spans.iter().enumerate() {
        let snippet = &record.function_source[span.byte_start..span.byte_end];
        let score = tfidf::cosine(&comment, &model.vectorize(snippet));
        if best.map(|(s, _)| score > s).unwrap_or(true) {
            best = Some((score, i));
        }
    }
    let Some((snippet_score, winner)) = best else {
        return Decision::Keep;
    };
    let span = &record.candidate_spans[winner];
    let rest = format!(
        "{}{}",
        &record.function_source[..span.byte_start],
        &record.function_source[span.byte_end..]
    );
    let rest_score = tfidf::cosine(&comment, &model.vectorize(&rest));
    if snippet_score + margin < rest_score {
        Decision::Drop(DropReason::Reliance)
    } else {
        Decision::Keep
    }
}

/// Builds the reliance model over a corpus: one document per distinct
/// function, identified by `function_id`.
pub fn build_tfidf(records: &[CorpusRecord]) -> Result<TfidfModel, FilterError> {
    let mut sources: std::collections::BTreeMap<&str, &str> = std::collections::BTreeMap::new();
    for r in records {
        sources.entry(r.function_id.as_str()).or_insert(r.function_source.as_str());
    }
    if sources.is_empty() {
        return Err(FilterError::EmptyCorpus);
    }
    Ok(TfidfModel::build(sources.values().copied()))
}

/// Filters a corpus, returning the kept records and a reconciled report.
pub fn filter_corpus(records: &[CorpusRecord], config: &FilterConfig) -> (Vec<CorpusRecord>, FilterReport) {
    let rules = RegexRules::new(config);
    let model = build_tfidf(records).ok();

    let decisions: Vec<Decision> = records
        .par_iter()
        .map(|r| match rules.evaluate(&r.comment_text) {
            Decision::Keep => match &model {
                Some(m) => reliance_filter(r, m, config.margin),
                None => Decision::Keep,
            },
            drop => drop,
        })
        .collect();

    let mut kept = Vec::new();
    let mut report = FilterReport::default();
    for (record, decision) in records.iter().zip(decisions) {
        match decision {
            Decision::Keep => {
                report.kept += 1;
                kept.push(record.clone());
            }
            Decision::Drop(reason) => report.record_drop(reason, &record.pair_id),
        }
    }
    (kept, report)
}
