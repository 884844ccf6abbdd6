//! Shared primitives for the codegrain workspace.
//!
//! This crate holds everything the other crates agree on: the snippet
//! granularity enum, the subword tokenizer, the learned encoder parameters,
//! dense linear algebra kernels, a reverse-mode autodiff tape over those
//! kernels, and the binary checkpoint format.

pub mod checkpoint;
pub mod encode;
pub mod granularity;
pub mod linalg;
pub mod params;
pub mod tape;
pub mod tokenize;

pub use checkpoint::{load_params, save_params, Fingerprint};
pub use encode::{encode_query, encode_tokens, EmbeddingMatrix};
pub use granularity::Granularity;
pub use params::EncoderParams;
pub use tape::{Gradients, NodeId, ScalarId, Tape};
pub use tokenize::{count_tokens, split_terms, tokenize, TokenSeq, VOCAB_SIZE};

use thiserror::Error;

/// Errors produced by core serialization and encoding routines.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    /// The byte stream is not a checkpoint or is truncated/corrupt.
    #[error("bad checkpoint: {0}")]
    Format(String),
    /// A stored version number this build does not understand.
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
}
