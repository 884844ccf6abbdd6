//! Snippet vectors from token embeddings, guided by the snippet tree.
//!
//! Statements are mean pools of their token rows. Blocks and functions
//! pool their own direct tokens (tokens in span but in no child's span,
//! falling back to the whole span), then fold in the mean of their
//! children's vectors through a learned projection and a layer norm.
//! Everything is computed bottom-up over the tree from a single encoding
//! of the whole function, so snippet vectors can be built offline; query
//! scoring never calls into this crate.
//!
//! The plain path and the tape path share the arithmetic kernels in
//! `codegrain_core::linalg`, so their outputs are bit-identical.

mod pool;
mod taped;
mod tree;

pub use pool::{pool_span, pool_statement};
pub use taped::{represent_all_tape, represent_snippet_tape};
pub use tree::SnippetTree;

use codegrain_core::linalg;
use codegrain_core::{EmbeddingMatrix, EncoderParams, Granularity, TokenSeq};
use codegrain_extract::{HierarchyIndex, Snippet};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RepresentError {
    /// The snippet's span holds no tokens (it was truncated away).
    #[error("no tokens in span for snippet {snippet_id}")]
    EmptySpan { snippet_id: String },
}

/// How block and function vectors are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregationMode {
    /// Fold child vectors into the parent through the projection and
    /// layer norm.
    Hierarchical,
    /// Mean-pool every snippet's whole span, ignoring the tree.
    MeanPool,
}

/// A snippet's dense vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SnippetVector {
    pub snippet_id: String,
    pub granularity: Granularity,
    pub vector: Vec<f64>,
}

/// Vectors for one function, plus the snippets that had to be skipped.
#[derive(Debug, Clone, Default)]
pub struct RepresentOutcome {
    /// One vector per surviving snippet, in input order.
    pub vectors: Vec<SnippetVector>,
    /// Snippet ids whose spans held no tokens after truncation.
    pub skipped: Vec<String>,
}

/// Folds a mean of child vectors into the root vector.
///
/// Returns `layer_norm(root + W * mean(children))`; with no children the
/// projection term vanishes and this is `layer_norm(root)`.
pub fn aggregate_node(root_vec: &[f64], child_vecs: &[&[f64]], params: &EncoderParams) -> Vec<f64> {
    let combined = if child_vecs.is_empty() {
        root_vec.to_vec()
    } else {
        let mean = linalg::mean_rows(child_vecs);
        let projected = linalg::matvec(&params.agg_w, params.dim, &mean);
        linalg::add(root_vec, &projected)
    };
    linalg::layer_norm(&combined, &params.ln_gain, &params.ln_bias).0
}

/// Computes one snippet's vector by naive recursion over its children.
pub fn represent_snippet(
    snippet: &Snippet,
    snippets: &[Snippet],
    hierarchy: &HierarchyIndex,
    matrix: &EmbeddingMatrix,
    seq: &TokenSeq,
    params: &EncoderParams,
    mode: AggregationMode,
) -> Result<SnippetVector, RepresentError> {
    let tree = SnippetTree::new(snippets, hierarchy);
    let vector = represent_rec(&snippet.snippet_id, &tree, matrix, seq, params, mode)?;
    Ok(SnippetVector {
        snippet_id: snippet.snippet_id.clone(),
        granularity: snippet.granularity,
        vector,
    })
}

/// Computes vectors for every snippet in the function, bottom-up.
///
/// Snippets without tokens are skipped and recorded; parents aggregate
/// over their surviving children only.
pub fn represent_all(
    snippets: &[Snippet],
    hierarchy: &HierarchyIndex,
    matrix: &EmbeddingMatrix,
    seq: &TokenSeq,
    params: &EncoderParams,
    mode: AggregationMode,
) -> RepresentOutcome {
    let tree = SnippetTree::new(snippets, hierarchy);
    let mut memo: BTreeMap<&str, Option<Vec<f64>>> = BTreeMap::new();
    let mut outcome = RepresentOutcome::default();
    for snippet in snippets {
        match memo_rec(&snippet.snippet_id, &tree, matrix, seq, params, mode, &mut memo) {
            Some(vector) => outcome.vectors.push(SnippetVector {
                snippet_id: snippet.snippet_id.clone(),
                granularity: snippet.granularity,
                vector,
            }),
            None => outcome.skipped.push(snippet.snippet_id.clone()),
        }
    }
    outcome
}

fn represent_rec(
    id: &str,
    tree: &SnippetTree<'_>,
    matrix: &EmbeddingMatrix,
    seq: &TokenSeq,
    params: &EncoderParams,
    mode: AggregationMode,
) -> Result<Vec<f64>, RepresentError> {
    let snippet = tree.get(id);
    let empty = || RepresentError::EmptySpan {
        snippet_id: id.to_string(),
    };

    if mode == AggregationMode::MeanPool || snippet.granularity == Granularity::Statement {
        return pool_span(matrix, seq, snippet.byte_start, snippet.byte_end).ok_or_else(empty);
    }

    let mut child_vecs = Vec::new();
    for child in tree.children(id) {
        // Children whose spans were truncated away contribute nothing.
        match represent_rec(&child.snippet_id, tree, matrix, seq, params, mode) {
            Ok(v) => child_vecs.push(v),
            Err(RepresentError::EmptySpan { .. }) => {}
        }
    }
    let root_vec = tree.direct_pool(id, matrix, seq).ok_or_else(empty)?;
    let refs: Vec<&[f64]> = child_vecs.iter().map(Vec::as_slice).collect();
    Ok(aggregate_node(&root_vec, &refs, params))
}

fn memo_rec<'a>(
    id: &str,
    tree: &SnippetTree<'a>,
    matrix: &EmbeddingMatrix,
    seq: &TokenSeq,
    params: &EncoderParams,
    mode: AggregationMode,
    memo: &mut BTreeMap<&'a str, Option<Vec<f64>>>,
) -> Option<Vec<f64>> {
    if let Some(cached) = memo.get(id) {
        return cached.clone();
    }
    let snippet = tree.get(id);
    let vector = if mode == AggregationMode::MeanPool
        || snippet.granularity == Granularity::Statement
    {
        pool_span(matrix, seq, snippet.byte_start, snippet.byte_end)
    } else {
        let mut child_vecs = Vec::new();
        for child in tree.children(id) {
            if let Some(v) = memo_rec(&child.snippet_id, tree, matrix, seq, params, mode, memo) {
                child_vecs.push(v);
            }
        }
        tree.direct_pool(id, matrix, seq).map(|root_vec| {
            let refs: Vec<&[f64]> = child_vecs.iter().map(Vec::as_slice).collect();
            aggregate_node(&root_vec, &refs, params)
        })
    };
    memo.insert(tree.get(id).snippet_id.as_str(), vector.clone());
    vector
}

#[cfg(test)]
mod tests {
    use super::*;
    use codegrain_core::tokenize::{tokenize, DEFAULT_MAX_CODE_TOKENS};
    use codegrain_core::{encode_tokens, EncoderParams};
    use codegrain_extract::HierarchyIndex;

    fn snippet(id: &str, g: Granularity, span: (usize, usize), parent: Option<&str>) -> Snippet {
        Snippet {
            snippet_id: id.into(),
            function_id: "f".into(),
            granularity: g,
            byte_start: span.0,
            byte_end: span.1,
            start_line: 1,
            end_line: 1,
            parent_id: parent.map(String::from),
        }
    }

    fn setup(text: &str, dim: usize) -> (codegrain_core::TokenSeq, EmbeddingMatrix, EncoderParams) {
        let params = EncoderParams::seeded(dim, 7);
        let seq = tokenize(text, DEFAULT_MAX_CODE_TOKENS, params.tokenizer_seed);
        let matrix = encode_tokens(&seq, &params);
        (seq, matrix, params)
    }

    #[test]
    fn aggregate_without_children_is_layer_norm_of_root() {
        let mut params = EncoderParams::seeded(2, 1);
        params.agg_w = vec![0.3, -0.2, 0.5, 0.9];
        let root = [3.0, 1.0];
        let got = aggregate_node(&root, &[], &params);
        let want = linalg::layer_norm(&root, &params.ln_gain, &params.ln_bias).0;
        assert_eq!(got, want);
    }

    #[test]
    fn aggregate_normalizes_root_when_projection_is_zero() {
        // root [3, 1]: mean 2, variance 1, so the output is
        // +-1/sqrt(1 + eps) with the zero-initialized projection.
        let params = EncoderParams::seeded(2, 1);
        let child = [5.0, -2.0];
        let got = aggregate_node(&[3.0, 1.0], &[&child], &params);
        let unit = 1.0 / (1.0 + 1e-5f64).sqrt();
        assert!((got[0] - unit).abs() < 1e-15);
        assert!((got[1] + unit).abs() < 1e-15);
    }

    #[test]
    fn aggregate_duplicate_children_match_single_child() {
        let mut params = EncoderParams::seeded(3, 2);
        for (i, w) in params.agg_w.iter_mut().enumerate() {
            *w = (i as f64).sin() * 0.3;
        }
        let root = [0.4, -1.0, 2.0];
        let c = [1.0, 2.0, -0.5];
        let once = aggregate_node(&root, &[&c], &params);
        let twice = aggregate_node(&root, &[&c, &c], &params);
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_statement_function_aggregates_itself() {
        // Function span equals the statement span, so the function's
        // direct-token fallback pools the same tokens as the statement.
        let text = "x = 1";
        let (seq, matrix, mut params) = setup(text, 4);
        for (i, w) in params.agg_w.iter_mut().enumerate() {
            *w = ((i % 5) as f64 - 2.0) * 0.1;
        }
        let snippets = vec![
            snippet("f#f", Granularity::Function, (0, 5), None),
            snippet("f#s0_5", Granularity::Statement, (0, 5), Some("f#f")),
        ];
        let hierarchy = HierarchyIndex::from_snippets(&snippets);
        let out = represent_all(&snippets, &hierarchy, &matrix, &seq, &params, AggregationMode::Hierarchical);
        assert_eq!(out.vectors.len(), 2);
        assert!(out.skipped.is_empty());

        let stmt = pool_span(&matrix, &seq, 0, 5).unwrap();
        let want = aggregate_node(&stmt, &[&stmt], &params);
        assert_eq!(out.vectors[0].vector, want);
        assert_eq!(out.vectors[1].vector, stmt);
    }

    #[test]
    fn zero_projection_degrades_to_normalized_pooling() {
        // With the default zero projection, every block and function
        // vector is bit-identical to the layer norm of its direct pool.
        let text = "def f(a):\n    if a:\n        x = 1\n        y = 2\n    return a\n";
        let (seq, matrix, params) = setup(text, 8);
        let if_span = (14, 47);
        let snippets = vec![
            snippet("f#f", Granularity::Function, (0, text.len()), None),
            snippet("f#b", Granularity::Block, if_span, Some("f#f")),
            snippet("f#s1", Granularity::Statement, (28, 33), Some("f#b")),
            snippet("f#s2", Granularity::Statement, (42, 47), Some("f#b")),
            snippet("f#s3", Granularity::Statement, (52, 60), Some("f#f")),
        ];
        let hierarchy = HierarchyIndex::from_snippets(&snippets);
        let out = represent_all(&snippets, &hierarchy, &matrix, &seq, &params, AggregationMode::Hierarchical);
        let tree = SnippetTree::new(&snippets, &hierarchy);
        for sv in &out.vectors {
            if sv.granularity == Granularity::Statement {
                continue;
            }
            let root = tree.direct_pool(&sv.snippet_id, &matrix, &seq).unwrap();
            let want = linalg::layer_norm(&root, &params.ln_gain, &params.ln_bias).0;
            let got_bits: Vec<u64> = sv.vector.iter().map(|v| v.to_bits()).collect();
            let want_bits: Vec<u64> = want.iter().map(|v| v.to_bits()).collect();
            assert_eq!(got_bits, want_bits);
        }
    }

    #[test]
    fn naive_recursion_matches_memoized_pass() {
        let text = "def g(n):\n    for i in n:\n        a = i\n        b = i\n    return n\n";
        let (seq, matrix, mut params) = setup(text, 6);
        for (i, w) in params.agg_w.iter_mut().enumerate() {
            *w = ((i * 13 % 7) as f64 - 3.0) * 0.05;
        }
        let for_span = (14, 53);
        let snippets = vec![
            snippet("f#f", Granularity::Function, (0, text.len()), None),
            snippet("f#b", Granularity::Block, for_span, Some("f#f")),
            snippet("f#s1", Granularity::Statement, (34, 39), Some("f#b")),
            snippet("f#s2", Granularity::Statement, (48, 53), Some("f#b")),
            snippet("f#s3", Granularity::Statement, (58, 66), Some("f#f")),
        ];
        let hierarchy = HierarchyIndex::from_snippets(&snippets);
        let out = represent_all(&snippets, &hierarchy, &matrix, &seq, &params, AggregationMode::Hierarchical);
        for sv in &out.vectors {
            let s = snippets.iter().find(|s| s.snippet_id == sv.snippet_id).unwrap();
            let naive = represent_snippet(s, &snippets, &hierarchy, &matrix, &seq, &params, AggregationMode::Hierarchical).unwrap();
            assert_eq!(naive.vector, sv.vector);
        }
    }

    #[test]
    fn mean_pool_mode_keeps_statements_and_changes_parents() {
        let text = "def g(n):\n    if n:\n        a = n\n    return n\n";
        let (seq, matrix, mut params) = setup(text, 6);
        for (i, w) in params.agg_w.iter_mut().enumerate() {
            *w = ((i % 3) as f64 + 1.0) * 0.1;
        }
        let snippets = vec![
            snippet("f#f", Granularity::Function, (0, text.len()), None),
            snippet("f#b", Granularity::Block, (14, 33), Some("f#f")),
            snippet("f#s1", Granularity::Statement, (28, 33), Some("f#b")),
            snippet("f#s2", Granularity::Statement, (38, 46), Some("f#f")),
        ];
        let hierarchy = HierarchyIndex::from_snippets(&snippets);
        let tree_out = represent_all(&snippets, &hierarchy, &matrix, &seq, &params, AggregationMode::Hierarchical);
        let flat_out = represent_all(&snippets, &hierarchy, &matrix, &seq, &params, AggregationMode::MeanPool);
        let by_id = |out: &RepresentOutcome, id: &str| {
            out.vectors.iter().find(|v| v.snippet_id == id).unwrap().vector.clone()
        };
        assert_eq!(by_id(&tree_out, "f#s1"), by_id(&flat_out, "f#s1"));
        assert_eq!(by_id(&tree_out, "f#s2"), by_id(&flat_out, "f#s2"));
        assert_ne!(by_id(&tree_out, "f#b"), by_id(&flat_out, "f#b"));
        assert_ne!(by_id(&tree_out, "f#f"), by_id(&flat_out, "f#f"));
        assert_eq!(by_id(&flat_out, "f#b"), pool_span(&matrix, &seq, 14, 33).unwrap());
    }

    #[test]
    fn truncated_statement_is_skipped_and_reported() {
        // 200 three-token lines blow past the 320-token cap, so the tail
        // statement has no tokens left.
        let mut text = String::from("def f():\n");
        for i in 0..200 {
            text.push_str(&format!("    a{i} = {i}\n"));
        }
        let tail_start = text.len() - "    a199 = 199\n".len() + 4;
        let tail_end = text.len() - 1;
        let (seq, matrix, params) = setup(&text, 4);
        assert!(seq.tokens_in_span(tail_start, tail_end).is_empty());

        let first_start = "def f():\n    ".len();
        let snippets = vec![
            snippet("f#f", Granularity::Function, (0, text.len()), None),
            snippet("f#s_head", Granularity::Statement, (first_start, first_start + 6), Some("f#f")),
            snippet("f#s_tail", Granularity::Statement, (tail_start, tail_end), Some("f#f")),
        ];
        let hierarchy = HierarchyIndex::from_snippets(&snippets);
        let out = represent_all(&snippets, &hierarchy, &matrix, &seq, &params, AggregationMode::Hierarchical);
        assert_eq!(out.skipped, vec!["f#s_tail"]);
        assert_eq!(out.vectors.len(), 2);

        let err = represent_snippet(&snippets[2], &snippets, &hierarchy, &matrix, &seq, &params, AggregationMode::Hierarchical);
        assert!(matches!(err, Err(RepresentError::EmptySpan { ref snippet_id }) if snippet_id == "f#s_tail"));
    }
}
