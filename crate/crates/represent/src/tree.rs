//! Resolved view of one function's snippet tree.

use codegrain_core::linalg;
use codegrain_core::{EmbeddingMatrix, TokenSeq};
use codegrain_extract::{HierarchyIndex, Snippet};
use std::collections::BTreeMap;

/// Snippets of one function with their direct children resolved.
///
/// Lookup by id panics on unknown ids: the tree is always built from the
/// same snippet list that produced the hierarchy.
pub struct SnippetTree<'a> {
    by_id: BTreeMap<&'a str, &'a Snippet>,
    children: BTreeMap<&'a str, Vec<&'a Snippet>>,
}

impl<'a> SnippetTree<'a> {
    pub fn new(snippets: &'a [Snippet], hierarchy: &HierarchyIndex) -> SnippetTree<'a> {
        let by_id: BTreeMap<&'a str, &'a Snippet> = snippets
            .iter()
            .map(|s| (s.snippet_id.as_str(), s))
            .collect();
        let children = snippets
            .iter()
            .map(|s| {
                let kids: Vec<&'a Snippet> = hierarchy
                    .children_of(&s.snippet_id)
                    .iter()
                    .filter_map(|cid| by_id.get(cid.as_str()).copied())
                    .collect();
                (s.snippet_id.as_str(), kids)
            })
            .collect();
        SnippetTree { by_id, children }
    }

    pub fn get(&self, id: &str) -> &'a Snippet {
        self.by_id
            .get(id)
            .unwrap_or_else(|| panic!("snippet {id} not in tree"))
    }

    pub fn children(&self, id: &str) -> &[&'a Snippet] {
        self.children.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Token indexes of the snippet's own tokens: inside its span but in
    /// no direct child's span. Falls back to every token in the span, so
    /// a parent whose children cover it completely still pools something.
    pub fn direct_token_indexes(&self, id: &str, seq: &TokenSeq) -> Vec<usize> {
        let s = self.get(id);
        let all = seq.tokens_in_span(s.byte_start, s.byte_end);
        let kids = self.children(id);
        let direct: Vec<usize> = all
            .iter()
            .copied()
            .filter(|&i| {
                let (ts, te) = seq.offsets[i];
                !kids
                    .iter()
                    .any(|c| ts >= c.byte_start && te <= c.byte_end)
            })
            .collect();
        if direct.is_empty() {
            all
        } else {
            direct
        }
    }

    /// Mean of the embedding rows for the snippet's direct tokens.
    pub fn direct_pool(
        &self,
        id: &str,
        matrix: &EmbeddingMatrix,
        seq: &TokenSeq,
    ) -> Option<Vec<f64>> {
        let idx = self.direct_token_indexes(id, seq);
        if idx.is_empty() {
            return None;
        }
        let rows: Vec<&[f64]> = idx.iter().map(|&i| matrix.token_row(i)).collect();
        Some(linalg::mean_rows(&rows))
    }
}
