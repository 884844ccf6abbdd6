//! Trainable encoder state.

use crate::tokenize::{DEFAULT_TOKENIZER_SEED, VOCAB_SIZE};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default embedding dimension. Checkpoints may carry any dimension up to
/// 768; this is only the starting value for freshly initialized parameters.
pub const DEFAULT_DIM: usize = 128;

/// Everything the encoder and aggregator learn.
///
/// The aggregation matrix starts at zero and the layer norm affine at
/// identity, so an untrained model reduces to mean pooling plus
/// normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    /// Embedding dimension `d`.
    pub dim: usize,
    /// Number of embedding rows; token ids must stay below this.
    pub vocab_size: usize,
    /// Seed of the hashing tokenizer these parameters were trained with.
    pub tokenizer_seed: u64,
    /// Token embedding table, row-major `[vocab_size x dim]`.
    pub embedding: Vec<f64>,
    /// Child-aggregation projection, row-major `[dim x dim]`.
    pub agg_w: Vec<f64>,
    /// Layer norm gain, `[dim]`.
    pub ln_gain: Vec<f64>,
    /// Layer norm bias, `[dim]`.
    pub ln_bias: Vec<f64>,
}

impl EncoderParams {
    /// Fresh parameters with the full hashing vocabulary.
    pub fn seeded(dim: usize, seed: u64) -> EncoderParams {
        EncoderParams::with_vocab(dim, VOCAB_SIZE, seed)
    }

    /// Fresh parameters with a custom vocabulary size. Small vocabularies
    /// keep gradient-check instances cheap.
    pub fn with_vocab(dim: usize, vocab_size: usize, seed: u64) -> EncoderParams {
        assert!(dim > 0 && vocab_size > 0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embedding = (0..vocab_size * dim)
            .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * 0.05)
            .collect();
        EncoderParams {
            dim,
            vocab_size,
            tokenizer_seed: DEFAULT_TOKENIZER_SEED,
            embedding,
            agg_w: vec![0.0; dim * dim],
            ln_gain: vec![1.0; dim],
            ln_bias: vec![0.0; dim],
        }
    }

    /// Embedding row for one token id.
    pub fn embedding_row(&self, id: u32) -> &[f64] {
        let i = id as usize;
        assert!(i < self.vocab_size, "token id {id} out of vocabulary");
        &self.embedding[i * self.dim..(i + 1) * self.dim]
    }

    /// True when every stored value is finite.
    pub fn all_finite(&self) -> bool {
        self.embedding
            .iter()
            .chain(&self.agg_w)
            .chain(&self.ln_gain)
            .chain(&self.ln_bias)
            .all(|v| v.is_finite())
    }
}
