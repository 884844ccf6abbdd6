//! Comment discovery, normalization, and kind classification.

use crate::config::{DocstringStyle, GrammarConfig};
use crate::segment::{docstring_statement_span, find_function_node, parse_source, LineMap};
use crate::types::{CommentKind, CommentRecord, SourceFunction};
use crate::ExtractError;
use tree_sitter::Node;

/// Strips comment markers and collapses whitespace, preserving case.
///
/// Handles `#`, `//`, `/* ... */` wrappers, and leading `*` continuation
/// markers inside block comments.
pub fn normalize_comment_text(raw: &str) -> String {
    let trimmed = raw.trim();
    let body = if let Some(inner) = trimmed.strip_prefix("/*") {
        inner.strip_suffix("*/").unwrap_or(inner)
    } else {
        trimmed
    };
    let mut words: Vec<&str> = Vec::new();
    for line in body.lines() {
        let line = line.trim_start();
        let line = line.trim_start_matches('#');
        let line = line.strip_prefix("//").unwrap_or(line);
        let line = line.trim_start_matches('*');
        words.extend(line.split_whitespace());
    }
    words.join(" ")
}

/// Strips string quotes (and r/b/f/u prefixes) from a docstring literal.
fn normalize_docstring_literal(raw: &str) -> String {
    let mut s = raw.trim();
    while let Some(first) = s.chars().next() {
        if first.is_ascii_alphabetic() {
            s = &s[1..];
        } else {
            break;
        }
    }
    for quote in ["\"\"\"", "'''", "\"", "'"] {
        if let Some(inner) = s.strip_prefix(quote) {
            s = inner.strip_suffix(quote).unwrap_or(inner);
            break;
        }
    }
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

struct RawComment {
    start_byte: usize,
    end_byte: usize,
    line: usize,
    end_line: usize,
    text: String,
    /// No code precedes the comment on its first line.
    whole_line: bool,
}

/// Extracts every comment of one function as a normalized record.
///
/// Kinds follow syntactic position only: the docstring position per the
/// grammar config, Trailing when code precedes the comment on its line,
/// Inline otherwise. Consecutive whole-line comments merge into a single
/// Inline record anchored at the first line. Records whose normalized text
/// is empty are dropped.
pub fn classify_comments(
    func: &SourceFunction,
    config: &GrammarConfig,
) -> Result<Vec<CommentRecord>, ExtractError> {
    let tree = parse_source(func, config)?;
    let function_node = find_function_node(tree.root_node(), config)
        .ok_or_else(|| ExtractError::NoFunction { function_id: func.id.clone() })?;
    let lines = LineMap::new(&func.source_text);

    let mut records: Vec<CommentRecord> = Vec::new();

    if let Some((ds, de)) = docstring_statement_span(function_node, config) {
        let (anchor, last) = lines.span_lines(ds, de);
        let text = normalize_docstring_literal(&func.source_text[ds..de]);
        if !text.is_empty() {
            records.push(CommentRecord {
                comment_id: format!("{}#doc", func.id),
                function_id: func.id.clone(),
                kind: CommentKind::Docstring,
                text,
                anchor_line: anchor,
                last_line: last,
            });
        }
    }

    let mut raw: Vec<RawComment> = Vec::new();
    collect_comments(tree.root_node(), config, func, &lines, &mut raw);
    raw.sort_by_key(|c| c.start_byte);

    // JSDoc-style docstring: the run of whole-line comments directly above
    // the function node, separated from it (and from each other) by
    // whitespace only.
    let mut doc_members = vec![false; raw.len()];
    if config.docstring == DocstringStyle::LeadingComment {
        let mut boundary = function_node.start_byte();
        for i in (0..raw.len()).rev() {
            let c = &raw[i];
            if c.end_byte > boundary {
                continue;
            }
            if c.whole_line && func.source_text[c.end_byte..boundary].trim().is_empty() {
                doc_members[i] = true;
                boundary = c.start_byte;
            } else {
                break;
            }
        }
        let members: Vec<&RawComment> =
            raw.iter().zip(&doc_members).filter(|(_, m)| **m).map(|(c, _)| c).collect();
        if !members.is_empty() {
            let text = members.iter().map(|c| c.text.as_str()).collect::<Vec<_>>().join(" ");
            if !text.trim().is_empty() {
                records.push(CommentRecord {
                    comment_id: format!("{}#doc", func.id),
                    function_id: func.id.clone(),
                    kind: CommentKind::Docstring,
                    text: text.split_whitespace().collect::<Vec<_>>().join(" "),
                    anchor_line: members[0].line,
                    last_line: members.last().unwrap().end_line,
                });
            }
        }
    }

    // Remaining comments inside the function: classify and merge.
    let fn_span = (function_node.start_byte(), function_node.end_byte());
    let in_function =
        |c: &RawComment| c.start_byte >= fn_span.0 && c.start_byte < fn_span.1;
    let mut i = 0;
    while i < raw.len() {
        if doc_members[i] || !in_function(&raw[i]) {
            i += 1;
            continue;
        }
        if !raw[i].whole_line {
            if !raw[i].text.is_empty() {
                records.push(CommentRecord {
                    comment_id: format!("{}#c{}", func.id, raw[i].line),
                    function_id: func.id.clone(),
                    kind: CommentKind::Trailing,
                    text: raw[i].text.clone(),
                    anchor_line: raw[i].line,
                    last_line: raw[i].end_line,
                });
            }
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < raw.len()
            && raw[j + 1].whole_line
            && !doc_members[j + 1]
            && in_function(&raw[j + 1])
            && raw[j + 1].line == raw[j].end_line + 1
        {
            j += 1;
        }
        let text = raw[i..=j].iter().map(|c| c.text.as_str()).collect::<Vec<_>>().join(" ");
        let text = text.split_whitespace().collect::<Vec<_>>().join(" ");
        if !text.is_empty() {
            records.push(CommentRecord {
                comment_id: format!("{}#c{}", func.id, raw[i].line),
                function_id: func.id.clone(),
                kind: CommentKind::Inline,
                text,
                anchor_line: raw[i].line,
                last_line: raw[j].end_line,
            });
        }
        i = j + 1;
    }

    records.sort_by(|a, b| (a.anchor_line, &a.comment_id).cmp(&(b.anchor_line, &b.comment_id)));
    Ok(records)
}

fn collect_comments(
    node: Node<'_>,
    config: &GrammarConfig,
    func: &SourceFunction,
    lines: &LineMap,
    out: &mut Vec<RawComment>,
) {
    let mut cursor = node.walk();
    for child in node.named_children(&mut cursor) {
        if config.is_comment_kind(child.kind()) {
            let start = child.start_byte();
            let end = child.end_byte();
            let (line, end_line) = lines.span_lines(start, end);
            let prefix = &func.source_text[lines.line_start(line)..start];
            out.push(RawComment {
                start_byte: start,
                end_byte: end,
                line,
                end_line,
                text: normalize_comment_text(&func.source_text[start..end]),
                whole_line: prefix.trim().is_empty(),
            });
        } else {
            collect_comments(child, config, func, lines, out);
        }
    }
}
