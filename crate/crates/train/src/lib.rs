//! Contrastive training of the snippet encoder.
//!
//! Corpus records are re-parsed into live snippet trees, comments become
//! queries, and the encoder learns by pulling each query toward its
//! best-scoring candidate snippet against in-batch and same-function
//! negatives, with one loss term per granularity. Runs are bit-for-bit
//! reproducible from the seed, and the analytic gradients are checked
//! against finite differences.

mod config;
mod examples;
mod gradcheck;
mod loss;
mod negatives;
mod step;
pub(crate) mod synth;
mod trainer;

pub use config::TrainConfig;
pub use examples::{pair_seed, prepare_examples, PreparedCorpus, TrainExample};
pub use gradcheck::{check_gradients, GradCheckReport};
pub use loss::{info_nce, max_sim, score, GranularityLosses};
pub use negatives::select_in_function_negatives;
pub use step::{apply_sgd, batch_loss, build_batch_loss, BatchLoss};
pub use trainer::{train, EpochMetrics, TrainOutcome};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("no candidates to score")]
    EmptyCandidates,
    #[error("empty batch")]
    EmptyBatch,
    #[error("degenerate corpus: {0}")]
    DegenerateCorpus(String),
    #[error("pair {pair_id} references unknown snippet {snippet_id}")]
    CorpusMismatch { pair_id: String, snippet_id: String },
    #[error(transparent)]
    Extract(#[from] codegrain_extract::ExtractError),
}
