//! Finite-difference validation of the analytic gradients.
//!
//! Each instance perturbs every learned coordinate the batch touches by
//! a central difference and compares against the backward pass. The
//! positive choice is an argmax, so instances whose top two candidate
//! scores sit closer than a guard gap are resampled rather than checked
//! across a selection flip.

use crate::step::{batch_loss, build_batch_loss};
use crate::{synth, TrainConfig, TrainError, TrainExample};
use codegrain_core::{encode_tokens, linalg, EncoderParams, Tape};
use codegrain_represent::{represent_all, AggregationMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

const FD_STEP: f64 = 1e-5;
const SCORE_GAP: f64 = 1e-3;

/// Outcome of one gradient-check run.
#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub instances: usize,
    pub coordinates: usize,
    pub max_relative_error: f64,
}

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

fn total_value(
    batch: &[&TrainExample],
    params: &EncoderParams,
    cfg: &TrainConfig,
) -> Result<f64, TrainError> {
    Ok(batch_loss(batch, params, cfg)?.total(cfg.alpha, cfg.beta))
}

/// True when every multi-candidate example keeps a clear argmax, so a
/// `FD_STEP` nudge cannot flip the selected positive.
fn well_separated(examples: &[TrainExample], params: &EncoderParams) -> bool {
    for ex in examples {
        if ex.candidate_ids.len() < 2 {
            continue;
        }
        let matrix = encode_tokens(&ex.seq, params);
        let out = represent_all(
            &ex.snippets,
            &ex.hierarchy,
            &matrix,
            &ex.seq,
            params,
            AggregationMode::Hierarchical,
        );
        let q_matrix = encode_tokens(&ex.query, params);
        let q = q_matrix.row(0);
        let mut scores: Vec<f64> = ex
            .candidate_ids
            .iter()
            .map(|id| {
                let v = out
                    .vectors
                    .iter()
                    .find(|v| &v.snippet_id == id)
                    .expect("synthetic candidates hold tokens");
                linalg::dot(q, &v.vector)
            })
            .collect();
        scores.sort_by(|a, b| b.partial_cmp(a).unwrap());
        if scores[0] - scores[1] < SCORE_GAP {
            return false;
        }
    }
    true
}

fn checked_coordinate(
    params: &mut EncoderParams,
    offset: usize,
    analytic: f64,
    batch: &[&TrainExample],
    cfg: &TrainConfig,
) -> Result<f64, TrainError> {
    let orig = params.embedding[offset];
    let (plus, minus) = {
        params.embedding[offset] = orig + FD_STEP;
        let plus = total_value(batch, params, cfg)?;
        params.embedding[offset] = orig - FD_STEP;
        let minus = total_value(batch, params, cfg)?;
        params.embedding[offset] = orig;
        (plus, minus)
    };
    Ok(relative_error(analytic, (plus - minus) / (2.0 * FD_STEP)))
}

/// Checks `instances` synthetic batches at dimension `dim`, returning the
/// worst relative error over every touched coordinate.
pub fn check_gradients(
    seed: u64,
    instances: usize,
    dim: usize,
) -> Result<GradCheckReport, TrainError> {
    let mut cfg = TrainConfig::default();
    cfg.dim = dim;

    let mut worst: f64 = 0.0;
    let mut coordinates = 0usize;
    for i in 0..instances {
        let (examples, mut params) = {
            let mut attempt = 0u64;
            loop {
                let sub = seed
                    .wrapping_mul(1_000_003)
                    .wrapping_add(i as u64 * 7919)
                    .wrapping_add(attempt);
                let mut rng = ChaCha8Rng::seed_from_u64(sub);
                let built = synth::instance(&mut rng, dim);
                if well_separated(&built.0, &built.1) {
                    break built;
                }
                attempt += 1;
            }
        };
        let batch: Vec<&TrainExample> = examples.iter().collect();

        let grads = {
            let mut tape = Tape::new(&params);
            let bl = build_batch_loss(&mut tape, &batch, &cfg)?;
            tape.backward(bl.total)
        };

        // Dense parameter tensors, one coordinate at a time.
        for (grad_vec, param_off) in [
            (grads.agg_w.clone(), AGG_W),
            (grads.ln_gain.clone(), LN_GAIN),
            (grads.ln_bias.clone(), LN_BIAS),
        ] {
            for (idx, analytic) in grad_vec.iter().enumerate() {
                let orig = read_param(&params, param_off, idx);
                write_param(&mut params, param_off, idx, orig + FD_STEP);
                let plus = total_value(&batch, &params, &cfg)?;
                write_param(&mut params, param_off, idx, orig - FD_STEP);
                let minus = total_value(&batch, &params, &cfg)?;
                write_param(&mut params, param_off, idx, orig);
                let numeric = (plus - minus) / (2.0 * FD_STEP);
                worst = worst.max(relative_error(*analytic, numeric));
                coordinates += 1;
            }
        }

        // Every embedding row the batch touched.
        let mut ids: Vec<u32> = grads.embedding.keys().copied().collect();
        ids.sort_unstable();
        for id in ids {
            let row_grad = grads.embedding[&id].clone();
            for (d, analytic) in row_grad.iter().enumerate() {
                let offset = id as usize * params.dim + d;
                let err = checked_coordinate(&mut params, offset, *analytic, &batch, &cfg)?;
                worst = worst.max(err);
                coordinates += 1;
            }
        }
    }
    Ok(GradCheckReport {
        instances,
        coordinates,
        max_relative_error: worst,
    })
}

const AGG_W: u8 = 0;
const LN_GAIN: u8 = 1;
const LN_BIAS: u8 = 2;

fn read_param(params: &EncoderParams, tensor: u8, idx: usize) -> f64 {
    match tensor {
        AGG_W => params.agg_w[idx],
        LN_GAIN => params.ln_gain[idx],
        _ => params.ln_bias[idx],
    }
}

fn write_param(params: &mut EncoderParams, tensor: u8, idx: usize, value: f64) {
    match tensor {
        AGG_W => params.agg_w[idx] = value,
        LN_GAIN => params.ln_gain[idx] = value,
        _ => params.ln_bias[idx] = value,
    }
}
