//! Corpus wire formats and the end-to-end extraction driver.
//!
//! The corpus is JSONL, one object per alignment pair, carrying enough of
//! the snippet geometry (byte spans, lines, parents) that consumers can
//! work from the record alone or re-parse `function_source` for the full
//! hierarchy.

use crate::align::align_comments;
use crate::comments::classify_comments;
use crate::config::{DocstringStyle, GrammarRegistry};
use crate::segment::{new_parser, parse_and_segment};
use crate::types::{CommentKind, Snippet, SourceFunction};
use crate::ExtractError;
use codegrain_core::Granularity;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// One source function as supplied to the extractor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputRecord {
    pub id: String,
    pub language: String,
    #[serde(default)]
    pub repo: String,
    #[serde(default)]
    pub path: String,
    pub source_text: String,
}

impl From<InputRecord> for SourceFunction {
    fn from(r: InputRecord) -> SourceFunction {
        SourceFunction {
            id: r.id,
            language: r.language,
            repo: r.repo,
            path: r.path,
            source_text: r.source_text,
        }
    }
}

/// Geometry of one candidate snippet on the wire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSpan {
    pub snippet_id: String,
    pub byte_start: usize,
    pub byte_end: usize,
    pub start_line: usize,
    pub end_line: usize,
    pub parent_id: Option<String>,
}

/// One alignment pair on the wire.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub pair_id: String,
    pub function_id: String,
    pub language: String,
    pub comment_text: String,
    pub comment_kind: CommentKind,
    pub granularity: Granularity,
    /// Ordered candidates, innermost first for inline chains.
    pub candidate_spans: Vec<CandidateSpan>,
    pub function_source: String,
}

/// Counters reported by an extraction run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExtractStats {
    pub functions_total: usize,
    pub functions_failed: usize,
    pub docstring_pairs: usize,
    pub inline_pairs: usize,
    pub trailing_pairs: usize,
    pub unaligned_comments: usize,
    pub skipped_multiline_statements: usize,
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, ExtractError> {
    let file = std::fs::File::open(path)
        .map_err(|e| ExtractError::Io { path: path.display().to_string(), source: e })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| ExtractError::Io { path: path.display().to_string(), source: e })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| ExtractError::MalformedRecord {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Reads a JSONL file of input functions.
pub fn read_input_jsonl(path: &Path) -> Result<Vec<InputRecord>, ExtractError> {
    read_jsonl(path)
}

/// Reads a corpus JSONL file.
pub fn read_corpus_jsonl(path: &Path) -> Result<Vec<CorpusRecord>, ExtractError> {
    read_jsonl(path)
}

/// Writes a corpus as JSONL. Output is byte-deterministic for equal input.
pub fn write_corpus_jsonl(path: &Path, records: &[CorpusRecord]) -> Result<(), ExtractError> {
    let wrap = |e| ExtractError::Io { path: path.display().to_string(), source: e };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(wrap)?);
    for r in records {
        let line = serde_json::to_string(r).expect("corpus records serialize");
        out.write_all(line.as_bytes()).map_err(wrap)?;
        out.write_all(b"\n").map_err(wrap)?;
    }
    out.flush().map_err(wrap)?;
    Ok(())
}

/// Splits one source file into function units.
///
/// Outermost function nodes become units (methods inside classes count;
/// functions nested in other functions do not). For languages documented by
/// a leading comment, the unit's text starts at that comment.
pub fn split_source_file(
    path_str: &str,
    repo: &str,
    text: &str,
    language: &str,
    registry: &GrammarRegistry,
) -> Result<Vec<SourceFunction>, ExtractError> {
    let config = registry.get(language)?;
    let mut parser = new_parser(config)?;
    let tree = parser
        .parse(text, None)
        .ok_or_else(|| ExtractError::SyntaxError { function_id: path_str.to_string() })?;

    let mut comment_spans: Vec<(usize, usize)> = Vec::new();
    let mut fn_nodes: Vec<(usize, usize, String, usize)> = Vec::new();
    collect_units(tree.root_node(), config, text, &mut fn_nodes, &mut comment_spans);

    let line_of = |byte: usize| text[..byte].bytes().filter(|b| *b == b'\n').count() + 1;
    let mut out = Vec::new();
    for (start, end, name, _) in fn_nodes {
        let mut unit_start = start;
        if config.docstring == DocstringStyle::LeadingComment {
            loop {
                let above = comment_spans
                    .iter()
                    .filter(|(_, ce)| *ce <= unit_start && text[*ce..unit_start].trim().is_empty())
                    .max_by_key(|(_, ce)| *ce);
                match above {
                    Some(&(cs, _)) if cs < unit_start => unit_start = cs,
                    _ => break,
                }
            }
        }
        out.push(SourceFunction {
            id: format!("{}:{}:{}", path_str, line_of(start), name),
            language: language.to_string(),
            repo: repo.to_string(),
            path: path_str.to_string(),
            source_text: text[unit_start..end].to_string(),
        });
    }
    Ok(out)
}

fn collect_units(
    node: tree_sitter::Node<'_>,
    config: &crate::config::GrammarConfig,
    text: &str,
    fns: &mut Vec<(usize, usize, String, usize)>,
    comments: &mut Vec<(usize, usize)>,
) {
    let mut cursor = node.walk();
    for child in node.named_children(&mut cursor) {
        if config.is_comment_kind(child.kind()) {
            comments.push((child.start_byte(), child.end_byte()));
            continue;
        }
        if config.is_function_kind(child.kind()) {
            let name = child
                .child_by_field_name("name")
                .map(|n| text[n.byte_range()].to_string())
                .unwrap_or_else(|| "anon".to_string());
            fns.push((child.start_byte(), child.end_byte(), name, child.id()));
            continue; // nested functions stay part of this unit
        }
        collect_units(child, config, text, fns, comments);
    }
}

/// Walks a directory tree collecting function units from recognized files.
///
/// Files are visited in sorted path order, so output order is stable.
pub fn functions_from_dir(
    root: &Path,
    registry: &GrammarRegistry,
) -> Result<Vec<SourceFunction>, ExtractError> {
    let mut files = Vec::new();
    walk_files(root, &mut files)?;
    files.sort();
    let mut out = Vec::new();
    for file in files {
        let ext = match file.extension().and_then(|e| e.to_str()) {
            Some(e) => e.to_string(),
            None => continue,
        };
        let Some(language) = registry.language_for_extension(&ext) else {
            continue;
        };
        let language = language.to_string();
        let text = std::fs::read_to_string(&file)
            .map_err(|e| ExtractError::Io { path: file.display().to_string(), source: e })?;
        let rel = file.strip_prefix(root).unwrap_or(&file).display().to_string();
        out.extend(split_source_file(&rel, "", &text, &language, registry)?);
    }
    Ok(out)
}

fn walk_files(dir: &Path, out: &mut Vec<std::path::PathBuf>) -> Result<(), ExtractError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| ExtractError::Io { path: dir.display().to_string(), source: e })?;
    for entry in entries {
        let entry = entry.map_err(|e| ExtractError::Io { path: dir.display().to_string(), source: e })?;
        let path = entry.path();
        if path.is_dir() {
            walk_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

/// Extracts alignment records from one function.
pub fn extract_function(
    func: &SourceFunction,
    registry: &GrammarRegistry,
    max_candidates: usize,
) -> Result<(Vec<CorpusRecord>, ExtractStats), ExtractError> {
    let config = registry.get(&func.language)?;
    let seg = parse_and_segment(func, config)?;
    let comments = classify_comments(func, config)?;
    let outcome = align_comments(func, &comments, &seg.snippets, max_candidates);

    let by_id: BTreeMap<&str, &Snippet> =
        seg.snippets.iter().map(|s| (s.snippet_id.as_str(), s)).collect();
    let mut stats = ExtractStats {
        functions_total: 1,
        unaligned_comments: outcome.unaligned_comments,
        skipped_multiline_statements: seg.skipped_multiline_statements,
        ..ExtractStats::default()
    };
    let mut records = Vec::with_capacity(outcome.pairs.len());
    for pair in outcome.pairs {
        match pair.comment.kind {
            CommentKind::Docstring => stats.docstring_pairs += 1,
            CommentKind::Inline => stats.inline_pairs += 1,
            CommentKind::Trailing => stats.trailing_pairs += 1,
        }
        let candidate_spans = pair
            .candidates
            .iter()
            .map(|id| {
                let s = by_id[id.as_str()];
                CandidateSpan {
                    snippet_id: s.snippet_id.clone(),
                    byte_start: s.byte_start,
                    byte_end: s.byte_end,
                    start_line: s.start_line,
                    end_line: s.end_line,
                    parent_id: s.parent_id.clone(),
                }
            })
            .collect();
        records.push(CorpusRecord {
            pair_id: pair.pair_id,
            function_id: func.id.clone(),
            language: func.language.clone(),
            comment_text: pair.comment.text,
            comment_kind: pair.comment.kind,
            granularity: pair.granularity,
            candidate_spans,
            function_source: func.source_text.clone(),
        });
    }
    Ok((records, stats))
}

/// Extracts a whole corpus, in parallel, preserving input order.
///
/// Functions that fail to parse are skipped and counted.
pub fn extract_corpus(
    functions: &[SourceFunction],
    registry: &GrammarRegistry,
    max_candidates: usize,
) -> (Vec<CorpusRecord>, ExtractStats) {
    let results: Vec<Result<(Vec<CorpusRecord>, ExtractStats), ExtractError>> = functions
        .par_iter()
        .map(|f| extract_function(f, registry, max_candidates))
        .collect();

    let mut records = Vec::new();
    let mut stats = ExtractStats::default();
    for result in results {
        match result {
            Ok((recs, s)) => {
                records.extend(recs);
                stats.functions_total += s.functions_total;
                stats.docstring_pairs += s.docstring_pairs;
                stats.inline_pairs += s.inline_pairs;
                stats.trailing_pairs += s.trailing_pairs;
                stats.unaligned_comments += s.unaligned_comments;
                stats.skipped_multiline_statements += s.skipped_multiline_statements;
            }
            Err(_) => {
                stats.functions_total += 1;
                stats.functions_failed += 1;
            }
        }
    }
    (records, stats)
}
