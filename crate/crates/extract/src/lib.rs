//! Source-function segmentation and comment alignment.
//!
//! The extractor parses each function with a grammar-driven parser, emits
//! snippets at three granularities (the function itself, control-flow
//! blocks, single-line statements), classifies comments by syntactic
//! position, and aligns each comment with its candidate snippets. All
//! grammar knowledge lives in declarative [`config::GrammarConfig`] files;
//! code never matches on node-kind names directly.

pub mod align;
pub mod comments;
pub mod config;
pub mod corpus;
pub mod segment;
pub mod types;

pub use align::{align_comments, AlignOutcome};
pub use comments::classify_comments;
pub use config::{DocstringStyle, GrammarConfig, GrammarRegistry};
pub use corpus::{
    extract_corpus, functions_from_dir, read_corpus_jsonl, read_input_jsonl, write_corpus_jsonl,
    CandidateSpan, CorpusRecord, ExtractStats, InputRecord,
};
pub use segment::{parse_and_segment, Segmentation};
pub use types::{AlignmentPair, CommentKind, CommentRecord, HierarchyIndex, Snippet, SourceFunction};

use thiserror::Error;

/// Errors from parsing, grammar lookup, and corpus I/O.
#[derive(Debug, Error)]
pub enum ExtractError {
    /// The configured parser produced a syntax error for this function.
    #[error("function {function_id}: source does not parse")]
    SyntaxError { function_id: String },
    /// The text parsed but contains no function node.
    #[error("function {function_id}: no function node found")]
    NoFunction { function_id: String },
    /// No grammar configuration is registered for the language tag.
    #[error("unsupported language {0:?}")]
    UnsupportedLanguage(String),
    /// A grammar configuration file failed to load or validate.
    #[error("grammar config {path}: {message}")]
    GrammarConfig { path: String, message: String },
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// A JSONL line failed to deserialize.
    #[error("{path}:{line}: malformed record: {message}")]
    MalformedRecord {
        path: String,
        line: usize,
        message: String,
    },
}
