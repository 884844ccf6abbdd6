//! Pairing comments with candidate snippets.

use crate::types::{AlignmentPair, CommentKind, CommentRecord, Snippet, SourceFunction};
use codegrain_core::Granularity;
use std::collections::BTreeMap;

/// Pairs plus counts of comments that found no snippet.
#[derive(Debug, Default)]
pub struct AlignOutcome {
    pub pairs: Vec<AlignmentPair>,
    pub unaligned_comments: usize,
}

/// Aligns classified comments with snippets of the same function.
///
/// Docstrings take the function snippet; trailing comments take the
/// statement on their line; inline comments take a nested chain of blocks
/// starting at the first code line after the comment, innermost first,
/// capped at `max_candidates`. Comments with no eligible snippet are
/// counted, not errors.
pub fn align_comments(
    func: &SourceFunction,
    comments: &[CommentRecord],
    snippets: &[Snippet],
    max_candidates: usize,
) -> AlignOutcome {
    assert!(max_candidates >= 1);
    let function_snippet = snippets.iter().find(|s| s.granularity == Granularity::Function);

    let mut statements_by_line: BTreeMap<usize, Vec<&Snippet>> = BTreeMap::new();
    let mut blocks_by_line: BTreeMap<usize, Vec<&Snippet>> = BTreeMap::new();
    for s in snippets {
        match s.granularity {
            Granularity::Statement => statements_by_line.entry(s.start_line).or_default().push(s),
            Granularity::Block => blocks_by_line.entry(s.start_line).or_default().push(s),
            Granularity::Function => {}
        }
    }

    // Lines fully occupied by whole-line comments are skipped when looking
    // for the code that follows an inline comment.
    let mut comment_lines: Vec<(usize, usize)> = comments
        .iter()
        .filter(|c| c.kind == CommentKind::Inline)
        .map(|c| (c.anchor_line, c.last_line))
        .collect();
    comment_lines.sort_unstable();
    let is_comment_line =
        |line: usize| comment_lines.iter().any(|(a, b)| *a <= line && line <= *b);

    let source_lines: Vec<&str> = func.source_text.lines().collect();
    let last_line = function_snippet.map(|f| f.end_line).unwrap_or(source_lines.len());

    let mut out = AlignOutcome::default();
    let mut seq = 0usize;
    for comment in comments {
        let candidates: Option<(Vec<String>, Granularity)> = match comment.kind {
            CommentKind::Docstring => function_snippet
                .map(|f| (vec![f.snippet_id.clone()], Granularity::Function)),
            CommentKind::Trailing => statements_by_line
                .get(&comment.anchor_line)
                .and_then(|v| v.iter().min_by_key(|s| s.byte_start))
                .map(|s| (vec![s.snippet_id.clone()], Granularity::Statement)),
            CommentKind::Inline => {
                first_code_line(comment.last_line + 1, last_line, &source_lines, &is_comment_line)
                    .and_then(|line| blocks_by_line.get(&line))
                    .and_then(|blocks| build_chain(blocks, max_candidates))
                    .map(|chain| (chain, Granularity::Block))
            }
        };
        match candidates {
            Some((candidates, granularity)) => {
                out.pairs.push(AlignmentPair {
                    pair_id: format!("{}:p{}", func.id, seq),
                    comment: comment.clone(),
                    candidates,
                    granularity,
                });
                seq += 1;
            }
            None => out.unaligned_comments += 1,
        }
    }
    out
}

/// First line in `[from, to]` that is neither blank nor a comment line.
fn first_code_line(
    from: usize,
    to: usize,
    source_lines: &[&str],
    is_comment_line: &dyn Fn(usize) -> bool,
) -> Option<usize> {
    (from..=to).find(|line| {
        source_lines
            .get(line - 1)
            .map(|l| !l.trim().is_empty() && !is_comment_line(*line))
            .unwrap_or(false)
    })
}

/// Orders same-line blocks into a strictly nested chain, innermost first.
///
/// The chain starts at the earliest, smallest block on the line and grows
/// outward through blocks that contain it, so an `if` expands to `if/else`
/// and so on, up to `max_candidates` entries.
fn build_chain(blocks: &[&Snippet], max_candidates: usize) -> Option<Vec<String>> {
    let mut sorted: Vec<&&Snippet> = blocks.iter().collect();
    sorted.sort_by_key(|s| (s.byte_start, s.byte_end - s.byte_start));
    let first = sorted.first()?;
    let mut chain: Vec<&Snippet> = vec![first];
    for b in sorted.iter().skip(1) {
        if b.contains(chain.last().unwrap()) {
            chain.push(b);
        }
    }
    chain.truncate(max_candidates);
    Some(chain.into_iter().map(|s| s.snippet_id.clone()).collect())
}
