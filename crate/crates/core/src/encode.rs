//! Plain (non-tape) encoding of token sequences and queries.

use crate::linalg::mean_rows;
use crate::params::EncoderParams;
use crate::tokenize::{tokenize, TokenSeq, DEFAULT_MAX_QUERY_TOKENS};

/// Per-token embeddings for one sequence.
///
/// Row 0 is a reserved sequence-level slot holding the mean of all token
/// rows; rows `1..=n` are the token embeddings in source order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    rows: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total rows including the reserved row 0.
    pub fn n_rows(&self) -> usize {
        self.rows.len() / self.dim
    }

    /// Number of token rows.
    pub fn n_tokens(&self) -> usize {
        self.n_rows() - 1
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    /// Embedding of token `i` (0-based over tokens, skipping the reserved row).
    pub fn token_row(&self, i: usize) -> &[f64] {
        self.row(i + 1)
    }
}

/// Looks up embedding rows for a token sequence.
///
/// The reserved row 0 is the mean of the token rows, or zero for an empty
/// sequence.
pub fn encode_tokens(seq: &TokenSeq, params: &EncoderParams) -> EmbeddingMatrix {
    let dim = params.dim;
    let mut rows = vec![0.0; dim];
    for id in &seq.ids {
        rows.extend_from_slice(params.embedding_row(*id));
    }
    if !seq.is_empty() {
        let token_rows: Vec<&[f64]> = seq.ids.iter().map(|id| params.embedding_row(*id)).collect();
        rows[..dim].copy_from_slice(&mean_rows(&token_rows));
    }
    EmbeddingMatrix { dim, rows }
}

/// Mean-pooled query embedding, truncated to `limit` tokens.
pub fn encode_query_limited(text: &str, params: &EncoderParams, limit: usize) -> Vec<f64> {
    let seq = tokenize(text, limit, params.tokenizer_seed);
    if seq.is_empty() {
        return vec![0.0; params.dim];
    }
    let token_rows: Vec<&[f64]> = seq.ids.iter().map(|id| params.embedding_row(*id)).collect();
    mean_rows(&token_rows)
}

/// Mean-pooled query embedding with the default query-length cap.
pub fn encode_query(text: &str, params: &EncoderParams) -> Vec<f64> {
    encode_query_limited(text, params, DEFAULT_MAX_QUERY_TOKENS)
}
