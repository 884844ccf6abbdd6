//! Snippet vectors recorded onto the autodiff tape.
//!
//! Mirrors the plain path node for node: pools are tape means over embed
//! nodes, aggregation is mean, projection, add, layer norm. Both paths
//! run the same kernels, so values agree bitwise.

use crate::{AggregationMode, RepresentError, SnippetTree};
use codegrain_core::{Granularity, NodeId, Tape, TokenSeq};
use codegrain_extract::{HierarchyIndex, Snippet};
use std::collections::BTreeMap;

struct TapeBuilder<'a, 'p, 't> {
    tape: &'t mut Tape<'p>,
    tree: &'t SnippetTree<'a>,
    seq: &'t TokenSeq,
    mode: AggregationMode,
    embeds: BTreeMap<u32, NodeId>,
    memo: BTreeMap<&'a str, Option<NodeId>>,
}

impl<'a, 'p, 't> TapeBuilder<'a, 'p, 't> {
    fn embed(&mut self, token_index: usize) -> NodeId {
        let id = self.seq.ids[token_index];
        if let Some(&node) = self.embeds.get(&id) {
            return node;
        }
        let node = self.tape.embed(id);
        self.embeds.insert(id, node);
        node
    }

    fn pool(&mut self, indexes: &[usize]) -> Option<NodeId> {
        if indexes.is_empty() {
            return None;
        }
        let nodes: Vec<NodeId> = indexes.iter().map(|&i| self.embed(i)).collect();
        Some(self.tape.mean(&nodes))
    }

    fn build(&mut self, id: &str) -> Option<NodeId> {
        if let Some(cached) = self.memo.get(id) {
            return *cached;
        }
        let snippet = self.tree.get(id);
        let node = if self.mode == AggregationMode::MeanPool
            || snippet.granularity == Granularity::Statement
        {
            let idx = self.seq.tokens_in_span(snippet.byte_start, snippet.byte_end);
            self.pool(&idx)
        } else {
            let mut child_nodes = Vec::new();
            for child in self.tree.children(id).to_vec() {
                if let Some(n) = self.build(&child.snippet_id) {
                    child_nodes.push(n);
                }
            }
            let direct = self.tree.direct_token_indexes(id, self.seq);
            self.pool(&direct).map(|root| {
                if child_nodes.is_empty() {
                    self.tape.layer_norm(root)
                } else {
                    let mean = self.tape.mean(&child_nodes);
                    let projected = self.tape.matvec(mean);
                    let combined = self.tape.add(root, projected);
                    self.tape.layer_norm(combined)
                }
            })
        };
        self.memo.insert(snippet.snippet_id.as_str(), node);
        node
    }
}

/// Records every snippet bottom-up; returns tape nodes by snippet id and
/// the ids that were skipped for holding no tokens.
pub fn represent_all_tape(
    tape: &mut Tape<'_>,
    snippets: &[Snippet],
    hierarchy: &HierarchyIndex,
    seq: &TokenSeq,
    mode: AggregationMode,
) -> (BTreeMap<String, NodeId>, Vec<String>) {
    let tree = SnippetTree::new(snippets, hierarchy);
    let mut builder = TapeBuilder {
        tape,
        tree: &tree,
        seq,
        mode,
        embeds: BTreeMap::new(),
        memo: BTreeMap::new(),
    };
    let mut nodes = BTreeMap::new();
    let mut skipped = Vec::new();
    for snippet in snippets {
        match builder.build(&snippet.snippet_id) {
            Some(node) => {
                nodes.insert(snippet.snippet_id.clone(), node);
            }
            None => skipped.push(snippet.snippet_id.clone()),
        }
    }
    (nodes, skipped)
}

/// Records a single snippet's vector onto the tape.
pub fn represent_snippet_tape(
    tape: &mut Tape<'_>,
    snippet: &Snippet,
    snippets: &[Snippet],
    hierarchy: &HierarchyIndex,
    seq: &TokenSeq,
    mode: AggregationMode,
) -> Result<NodeId, RepresentError> {
    let tree = SnippetTree::new(snippets, hierarchy);
    let mut builder = TapeBuilder {
        tape,
        tree: &tree,
        seq,
        mode,
        embeds: BTreeMap::new(),
        memo: BTreeMap::new(),
    };
    builder
        .build(&snippet.snippet_id)
        .ok_or_else(|| RepresentError::EmptySpan {
            snippet_id: snippet.snippet_id.clone(),
        })
}
