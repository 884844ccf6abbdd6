//! Training hyperparameters and ablation switches.

use crate::TrainError;
use serde::{Deserialize, Serialize};

/// Everything a training run needs besides the corpus.
///
/// The ablation flags swap out one mechanism each: tree aggregation,
/// best-scoring candidate alignment, same-function negatives, and the
/// block or statement loss terms.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Embedding dimension of the encoder being trained.
    pub dim: usize,
    /// Weight of the block-level loss term.
    pub alpha: f64,
    /// Weight of the statement-level loss term.
    pub beta: f64,
    /// Softmax temperature for the contrastive loss.
    pub tau: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Same-function negatives sampled per example.
    pub negatives_per_example: usize,
    /// Fraction of pairs held out for early stopping, in [0, 1).
    pub holdout_fraction: f64,
    /// Epochs without held-out improvement before stopping; 0 disables.
    pub patience: usize,
    /// Mean-pool every snippet instead of aggregating over the tree.
    pub disable_hierarchy: bool,
    /// Align to the largest candidate instead of the best-scoring one.
    pub disable_max_sim: bool,
    /// Train with in-batch negatives only.
    pub disable_in_function_negatives: bool,
    /// Drop the block-level loss term.
    pub disable_block_loss: bool,
    /// Drop the statement-level loss term.
    pub disable_statement_loss: bool,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            dim: 128,
            alpha: 1.0,
            beta: 0.6,
            tau: 0.05,
            batch_size: 32,
            learning_rate: 0.05,
            epochs: 30,
            seed: 0,
            negatives_per_example: 3,
            holdout_fraction: 0.1,
            patience: 5,
            disable_hierarchy: false,
            disable_max_sim: false,
            disable_in_function_negatives: false,
            disable_block_loss: false,
            disable_statement_loss: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(TrainError::Config(format!(
                "temperature must be positive and finite, got {}",
                self.tau
            )));
        }
        if self.alpha < 0.0 || self.beta < 0.0 {
            return Err(TrainError::Config(format!(
                "loss weights must be non-negative, got alpha {} beta {}",
                self.alpha, self.beta
            )));
        }
        if self.dim == 0 {
            return Err(TrainError::Config("dimension must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch size must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(TrainError::Config("epoch count must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::Config(format!(
                "learning rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(TrainError::Config(format!(
                "holdout fraction must be in [0, 1), got {}",
                self.holdout_fraction
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        TrainConfig::default().validate().unwrap();
    }

    #[test]
    fn bad_values_are_rejected() {
        let mut cfg = TrainConfig::default();
        cfg.tau = 0.0;
        assert!(cfg.validate().is_err());
        cfg = TrainConfig::default();
        cfg.alpha = -0.1;
        assert!(cfg.validate().is_err());
        cfg = TrainConfig::default();
        cfg.holdout_fraction = 1.0;
        assert!(cfg.validate().is_err());
        cfg = TrainConfig::default();
        cfg.learning_rate = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn deserializes_with_partial_fields() {
        let cfg: TrainConfig = serde_json::from_str(r#"{"tau":0.1,"epochs":5}"#).unwrap();
        assert_eq!(cfg.tau, 0.1);
        assert_eq!(cfg.epochs, 5);
        assert_eq!(cfg.alpha, 1.0);
        assert_eq!(cfg.batch_size, 32);
        assert!(serde_json::from_str::<TrainConfig>(r#"{"bogus":1}"#).is_err());
    }
}
