//! TF-IDF vectors over code-token bags.
//!
//! Documents and queries share one tokenization: identifier-split,
//! lowercased subword pieces. Weights are `tf * idf` with raw-count tf
//! normalized by document length and smoothed idf
//! `ln(n_docs / (1 + df)) + 1`. Terms never seen in the corpus get no
//! weight, so they contribute nothing to similarity.

use codegrain_core::tokenize::split_terms;
use std::collections::BTreeMap;

/// Document frequencies learned from a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    df: BTreeMap<String, usize>,
    n_docs: usize,
}

impl TfidfModel {
    /// Builds the model from one bag per document.
    pub fn build<'a>(docs: impl Iterator<Item = &'a str>) -> TfidfModel {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        let mut n_docs = 0usize;
        for doc in docs {
            n_docs += 1;
            let mut seen: Vec<String> = split_terms(doc);
            seen.sort();
            seen.dedup();
            for term in seen {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        TfidfModel { df, n_docs }
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn df(&self, term: &str) -> usize {
        self.df.get(term).copied().unwrap_or(0)
    }

    /// Smoothed inverse document frequency; `None` for unseen terms.
    pub fn idf(&self, term: &str) -> Option<f64> {
        let df = *self.df.get(term)?;
        Some((self.n_docs as f64 / (1.0 + df as f64)).ln() + 1.0)
    }

    /// Sparse TF-IDF vector of any text, over seen terms only.
    pub fn vectorize(&self, text: &str) -> BTreeMap<String, f64> {
        let terms = split_terms(text);
        if terms.is_empty() {
            return BTreeMap::new();
        }
        let len = terms.len() as f64;
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for t in terms {
            *counts.entry(t).or_insert(0) += 1;
        }
        counts
            .into_iter()
            .filter_map(|(term, count)| {
                let idf = self.idf(&term)?;
                Some((term, count as f64 / len * idf))
            })
            .collect()
    }
}

/// Cosine similarity of two sparse vectors; 0 when either has zero norm.
pub fn cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let dot: f64 = a
        .iter()
        .filter_map(|(term, va)| b.get(term).map(|vb| va * vb))
        .sum();
    let na: f64 = a.values().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb)
}
