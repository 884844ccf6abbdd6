//! Domain types shared across the extraction pipeline.

use codegrain_core::Granularity;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// One function's worth of source text, the unit of extraction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceFunction {
    /// Stable identifier, unique within a corpus.
    pub id: String,
    /// Language tag resolved against the grammar registry.
    pub language: String,
    pub repo: String,
    pub path: String,
    /// Full function text, comments included. For languages whose doc
    /// comment precedes the function, the leading comment is part of this
    /// text.
    pub source_text: String,
}

/// A granularity-tagged span of one function's source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snippet {
    pub snippet_id: String,
    pub function_id: String,
    pub granularity: Granularity,
    /// Half-open byte offsets into the function's `source_text`.
    pub byte_start: usize,
    pub byte_end: usize,
    /// 1-based inclusive line numbers.
    pub start_line: usize,
    pub end_line: usize,
    /// Smallest enclosing snippet; `None` only for the function snippet.
    pub parent_id: Option<String>,
}

impl Snippet {
    /// True when this snippet's span strictly contains `other`'s.
    pub fn contains(&self, other: &Snippet) -> bool {
        self.byte_start <= other.byte_start
            && other.byte_end <= self.byte_end
            && (self.byte_start, self.byte_end) != (other.byte_start, other.byte_end)
    }

    /// True when the two spans share no bytes.
    pub fn disjoint_from(&self, other: &Snippet) -> bool {
        self.byte_end <= other.byte_start || other.byte_end <= self.byte_start
    }
}

/// Syntactic position of a comment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommentKind {
    /// Function-header documentation per language convention.
    Docstring,
    /// Whole-line comment (or a run of them) inside the function body.
    Inline,
    /// Comment sharing a line with code.
    Trailing,
}

impl CommentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CommentKind::Docstring => "docstring",
            CommentKind::Inline => "inline",
            CommentKind::Trailing => "trailing",
        }
    }
}

impl std::fmt::Display for CommentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A normalized comment with its position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommentRecord {
    pub comment_id: String,
    pub function_id: String,
    pub kind: CommentKind,
    /// Markers stripped, internal whitespace collapsed, case preserved.
    pub text: String,
    /// First source line of the comment (1-based).
    pub anchor_line: usize,
    /// Last source line of the (possibly merged) comment run.
    pub last_line: usize,
}

/// One comment aligned with its ordered candidate snippets.
///
/// Docstring and trailing comments have exactly one candidate; inline
/// comments carry a nested expansion chain, innermost first.
#[derive(Debug, Clone)]
pub struct AlignmentPair {
    pub pair_id: String,
    pub comment: CommentRecord,
    pub candidates: Vec<String>,
    pub granularity: Granularity,
}

/// Parent/child structure over one function's snippets.
#[derive(Debug, Clone, Default)]
pub struct HierarchyIndex {
    nodes: BTreeMap<String, HierarchyNode>,
}

#[derive(Debug, Clone, Default)]
struct HierarchyNode {
    parent: Option<String>,
    children: Vec<String>,
    ancestors: BTreeSet<String>,
}

impl HierarchyIndex {
    /// Builds the index from snippets whose `parent_id`s are already set.
    /// Children keep the order in which snippets are supplied.
    pub fn from_snippets(snippets: &[Snippet]) -> HierarchyIndex {
        let mut idx = HierarchyIndex::default();
        for s in snippets {
            idx.nodes.entry(s.snippet_id.clone()).or_default().parent = s.parent_id.clone();
            if let Some(p) = &s.parent_id {
                idx.nodes
                    .entry(p.clone())
                    .or_default()
                    .children
                    .push(s.snippet_id.clone());
            }
        }
        let ids: Vec<String> = idx.nodes.keys().cloned().collect();
        for id in ids {
            let mut chain = BTreeSet::new();
            let mut cur = idx.nodes[&id].parent.clone();
            while let Some(p) = cur {
                if !chain.insert(p.clone()) {
                    break; // cycle guard; cannot happen for span-nested input
                }
                cur = idx.nodes.get(&p).and_then(|n| n.parent.clone());
            }
            idx.nodes.get_mut(&id).unwrap().ancestors = chain;
        }
        idx
    }

    pub fn parent_of(&self, id: &str) -> Option<&str> {
        self.nodes.get(id).and_then(|n| n.parent.as_deref())
    }

    /// Direct children, ordered by span start.
    pub fn children_of(&self, id: &str) -> &[String] {
        self.nodes.get(id).map(|n| n.children.as_slice()).unwrap_or(&[])
    }

    pub fn ancestors_of(&self, id: &str) -> impl Iterator<Item = &str> {
        self.nodes
            .get(id)
            .into_iter()
            .flat_map(|n| n.ancestors.iter().map(String::as_str))
    }

    /// True when `ancestor` appears on `id`'s parent chain.
    pub fn is_ancestor(&self, ancestor: &str, id: &str) -> bool {
        self.nodes
            .get(id)
            .map(|n| n.ancestors.contains(ancestor))
            .unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}
