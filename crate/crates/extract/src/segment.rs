//! Parsing one function into its snippet hierarchy.

use crate::config::{DocstringStyle, GrammarConfig};
use crate::types::{HierarchyIndex, Snippet, SourceFunction};
use crate::ExtractError;
use codegrain_core::Granularity;
use tree_sitter::{Node, Parser};

/// Result of segmenting one function.
#[derive(Debug)]
pub struct Segmentation {
    /// All snippets, sorted by (byte_start ascending, byte_end descending),
    /// so every parent precedes its children. `parent_id`s are filled in.
    pub snippets: Vec<Snippet>,
    pub hierarchy: HierarchyIndex,
    /// Id of the single function-granularity snippet.
    pub function_snippet_id: String,
    /// Simple statements spanning more than one line are not emitted as
    /// snippets (statements are single-line by contract); they are counted
    /// here and their tokens stay with the enclosing block.
    pub skipped_multiline_statements: usize,
}

/// Maps byte offsets to 1-based line numbers.
pub(crate) struct LineMap {
    starts: Vec<usize>,
}

impl LineMap {
    pub(crate) fn new(text: &str) -> LineMap {
        let mut starts = vec![0];
        for (i, b) in text.bytes().enumerate() {
            if b == b'\n' {
                starts.push(i + 1);
            }
        }
        LineMap { starts }
    }

    pub(crate) fn line_of(&self, byte: usize) -> usize {
        self.starts.partition_point(|s| *s <= byte)
    }

    /// Byte offset where a 1-based line begins.
    pub(crate) fn line_start(&self, line: usize) -> usize {
        self.starts[line - 1]
    }

    /// Lines covered by a half-open byte span.
    pub(crate) fn span_lines(&self, start: usize, end: usize) -> (usize, usize) {
        let last = if end > start { end - 1 } else { start };
        (self.line_of(start), self.line_of(last))
    }
}

pub(crate) fn new_parser(config: &GrammarConfig) -> Result<Parser, ExtractError> {
    let mut parser = Parser::new();
    parser
        .set_language(&config.ts_language()?)
        .map_err(|e| ExtractError::GrammarConfig {
            path: config.language.clone(),
            message: format!("parser rejected grammar: {e}"),
        })?;
    Ok(parser)
}

/// Parses the full source text, failing on syntax errors.
pub(crate) fn parse_source(
    func: &SourceFunction,
    config: &GrammarConfig,
) -> Result<tree_sitter::Tree, ExtractError> {
    let mut parser = new_parser(config)?;
    let tree = parser
        .parse(&func.source_text, None)
        .ok_or_else(|| ExtractError::SyntaxError { function_id: func.id.clone() })?;
    if tree.root_node().has_error() {
        return Err(ExtractError::SyntaxError { function_id: func.id.clone() });
    }
    Ok(tree)
}

/// First node (depth-first) whose kind is a function kind.
pub(crate) fn find_function_node<'t>(root: Node<'t>, config: &GrammarConfig) -> Option<Node<'t>> {
    if config.is_function_kind(root.kind()) {
        return Some(root);
    }
    let mut cursor = root.walk();
    for child in root.named_children(&mut cursor) {
        if let Some(found) = find_function_node(child, config) {
            return Some(found);
        }
    }
    None
}

/// Byte range of the docstring statement for `body_first_string` languages,
/// so segmentation can leave it out of the statement snippets.
pub(crate) fn docstring_statement_span(
    function_node: Node<'_>,
    config: &GrammarConfig,
) -> Option<(usize, usize)> {
    if config.docstring != DocstringStyle::BodyFirstString {
        return None;
    }
    let body = function_node.child_by_field_name("body")?;
    let first = body.named_child(0)?;
    if first.kind() != "expression_statement" {
        return None;
    }
    let inner = first.named_child(0)?;
    if inner.kind() == "string" && first.named_child_count() == 1 {
        Some((first.start_byte(), first.end_byte()))
    } else {
        None
    }
}

/// Segments one parsed function into Function/Block/Statement snippets and
/// their containment hierarchy.
pub fn parse_and_segment(
    func: &SourceFunction,
    config: &GrammarConfig,
) -> Result<Segmentation, ExtractError> {
    let tree = parse_source(func, config)?;
    let function_node = find_function_node(tree.root_node(), config)
        .ok_or_else(|| ExtractError::NoFunction { function_id: func.id.clone() })?;
    let lines = LineMap::new(&func.source_text);
    let docstring_span = docstring_statement_span(function_node, config);

    let mut spans: Vec<(usize, usize, Granularity)> = Vec::new();
    spans.push((function_node.start_byte(), function_node.end_byte(), Granularity::Function));

    let mut fragment_parser = new_parser(config)?;
    let mut skipped_multiline = 0usize;
    collect_spans(
        function_node,
        function_node,
        config,
        func,
        &lines,
        docstring_span,
        &mut fragment_parser,
        &mut spans,
        &mut skipped_multiline,
    );

    // Parents must precede children: start ascending, end descending.
    spans.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    spans.dedup();

    let mut snippets: Vec<Snippet> = Vec::with_capacity(spans.len());
    let mut stack: Vec<usize> = Vec::new();
    for (start, end, gran) in spans {
        while let Some(&top) = stack.last() {
            let t = &snippets[top];
            if t.byte_start <= start && end <= t.byte_end {
                break;
            }
            stack.pop();
        }
        let parent_id = stack.last().map(|&i| snippets[i].snippet_id.clone());
        let (start_line, end_line) = lines.span_lines(start, end);
        let snippet_id = match gran {
            Granularity::Function => format!("{}#f", func.id),
            Granularity::Block => format!("{}#b{}_{}", func.id, start, end),
            Granularity::Statement => format!("{}#s{}_{}", func.id, start, end),
        };
        snippets.push(Snippet {
            snippet_id,
            function_id: func.id.clone(),
            granularity: gran,
            byte_start: start,
            byte_end: end,
            start_line,
            end_line,
            parent_id,
        });
        stack.push(snippets.len() - 1);
    }

    let hierarchy = HierarchyIndex::from_snippets(&snippets);
    Ok(Segmentation {
        function_snippet_id: format!("{}#f", func.id),
        snippets,
        hierarchy,
        skipped_multiline_statements: skipped_multiline,
    })
}

/// Walks the function subtree gathering block and statement spans.
///
/// Statements are terminal: nothing inside a statement becomes its own
/// snippet. Nested function definitions count as blocks.
#[allow(clippy::too_many_arguments)]
fn collect_spans(
    node: Node<'_>,
    root: Node<'_>,
    config: &GrammarConfig,
    func: &SourceFunction,
    lines: &LineMap,
    docstring_span: Option<(usize, usize)>,
    fragment_parser: &mut Parser,
    spans: &mut Vec<(usize, usize, Granularity)>,
    skipped_multiline: &mut usize,
) {
    let mut cursor = node.walk();
    for child in node.named_children(&mut cursor) {
        let kind = child.kind();
        if config.is_statement_kind(kind) {
            let span = (child.start_byte(), child.end_byte());
            if docstring_span == Some(span) {
                continue;
            }
            let (sl, el) = lines.span_lines(span.0, span.1);
            if sl == el {
                spans.push((span.0, span.1, Granularity::Statement));
            } else {
                *skipped_multiline += 1;
            }
            continue; // statements are leaves
        }
        if config.is_block_kind(kind) || (config.is_function_kind(kind) && child.id() != root.id()) {
            spans.push((child.start_byte(), child.end_byte(), Granularity::Block));
            for end in prefix_ends(child, config, func, fragment_parser) {
                spans.push((child.start_byte(), end, Granularity::Block));
            }
        }
        collect_spans(
            child,
            root,
            config,
            func,
            lines,
            docstring_span,
            fragment_parser,
            spans,
            skipped_multiline,
        );
    }
}

/// End offsets of valid proper prefixes of a block, formed by stripping its
/// tail clauses (else/elif/except/...). A prefix is kept only when its text
/// reparses cleanly on its own, so `try` without `except` never appears.
fn prefix_ends(
    block: Node<'_>,
    config: &GrammarConfig,
    func: &SourceFunction,
    fragment_parser: &mut Parser,
) -> Vec<usize> {
    let mut ends = Vec::new();
    let mut prev_end: Option<usize> = None;
    for i in 0..block.child_count() {
        let child = block.child(i).unwrap();
        if config.is_tail_kind(child.kind()) {
            if let Some(end) = prev_end {
                if end > block.start_byte() && end < block.end_byte() {
                    ends.push(end);
                }
            }
        }
        prev_end = Some(child.end_byte());
    }
    ends.retain(|end| {
        let fragment = &func.source_text[block.start_byte()..*end];
        fragment_parser
            .parse(fragment, None)
            .map(|t| !t.root_node().has_error() && t.root_node().named_child_count() > 0)
            .unwrap_or(false)
    });
    ends.dedup();
    ends
}
