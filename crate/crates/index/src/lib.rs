//! Snippet search index: a flat vector store over function, block, and
//! statement snippets, with dot-product ranking, reciprocal-rank
//! evaluation, and gradient-based match attribution.
//!
//! The index file embeds the fingerprint of the checkpoint it was built
//! from and search refuses mismatched parameters. Building and
//! attribution re-parse sources and sit behind the default `builder`
//! feature; with it disabled the crate serves queries with no parser or
//! autodiff dependency.

#[cfg(feature = "builder")]
mod builder;
mod eval;
mod format;
mod search;

#[cfg(feature = "builder")]
pub use builder::{attribute_match, build_index, SnippetContribution};
#[cfg(feature = "builder")]
pub use codegrain_represent::AggregationMode;
pub use eval::{evaluate_mrr, mean_reciprocal_rank, read_eval_jsonl, EvalRecord, GranularityMrr, MrrReport};
pub use format::{index_from_bytes, index_to_bytes, load_index, save_index, IndexEntry, SearchIndex};
pub use search::{rank_of, search, SearchHit};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("index format error: {0}")]
    Format(String),
    #[error("unsupported index version {0}")]
    UnsupportedVersion(u32),
    #[error("checkpoint does not match the index fingerprint")]
    FingerprintMismatch,
    #[error("index has no entries")]
    EmptyIndex,
    #[error("query has no tokens")]
    EmptyQuery,
    #[error("snippet {0} not found")]
    SnippetMissing(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[cfg(feature = "builder")]
    #[error(transparent)]
    Extract(#[from] codegrain_extract::ExtractError),
}
