//! Dense f64 kernels shared by the plain encoder and the autodiff tape.
//!
//! Both paths call exactly these functions, so a value computed with the
//! tape is bit-identical to the same value computed without it.

/// Inner product of two equally sized slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Elementwise sum of two vectors.
pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `acc += scale * x`, in place.
pub fn axpy(acc: &mut [f64], scale: f64, x: &[f64]) {
    debug_assert_eq!(acc.len(), x.len());
    for (a, v) in acc.iter_mut().zip(x) {
        *a += scale * v;
    }
}

/// Arithmetic mean of a non-empty set of rows.
///
/// Summation runs in the order the rows are given; callers that need
/// reproducible results must present rows in a stable order.
pub fn mean_rows(rows: &[&[f64]]) -> Vec<f64> {
    assert!(!rows.is_empty(), "mean of zero rows is undefined");
    let dim = rows[0].len();
    let mut out = vec![0.0; dim];
    for row in rows {
        debug_assert_eq!(row.len(), dim);
        for (o, v) in out.iter_mut().zip(*row) {
            *o += v;
        }
    }
    let inv = 1.0 / rows.len() as f64;
    for o in out.iter_mut() {
        *o *= inv;
    }
    out
}

/// `w * x` for a row-major `dim x dim` matrix `w`.
pub fn matvec(w: &[f64], dim: usize, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(w.len(), dim * dim);
    debug_assert_eq!(x.len(), dim);
    let mut out = vec![0.0; dim];
    for (i, o) in out.iter_mut().enumerate() {
        *o = dot(&w[i * dim..(i + 1) * dim], x);
    }
    out
}

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot(a, b) / (na * nb)
}

/// Variance floor keeping layer norm finite on constant inputs.
pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Intermediates from a layer norm forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct LayerNormCache {
    /// `(x - mean) / sqrt(var + eps)`, before gain and bias.
    pub normalized: Vec<f64>,
    /// `1 / sqrt(var + eps)`.
    pub inv_std: f64,
}

/// Layer normalization with learned gain and bias.
///
/// Uses the population variance (divide by `n`) and [`LAYER_NORM_EPS`].
pub fn layer_norm(x: &[f64], gain: &[f64], bias: &[f64]) -> (Vec<f64>, LayerNormCache) {
    let n = x.len();
    debug_assert!(n > 0);
    debug_assert_eq!(gain.len(), n);
    debug_assert_eq!(bias.len(), n);
    let mean = x.iter().sum::<f64>() / n as f64;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let inv_std = 1.0 / (var + LAYER_NORM_EPS).sqrt();
    let normalized: Vec<f64> = x.iter().map(|v| (v - mean) * inv_std).collect();
    let out = normalized
        .iter()
        .zip(gain.iter().zip(bias))
        .map(|(nh, (g, b))| g * nh + b)
        .collect();
    (out, LayerNormCache { normalized, inv_std })
}

/// Backward pass of [`layer_norm`].
///
/// Returns `(grad_x, grad_gain, grad_bias)` for one call site; the caller
/// accumulates across sites.
pub fn layer_norm_backward(
    grad_out: &[f64],
    cache: &LayerNormCache,
    gain: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = cache.normalized.len();
    debug_assert_eq!(grad_out.len(), n);
    debug_assert_eq!(gain.len(), n);
    let grad_bias = grad_out.to_vec();
    let grad_gain: Vec<f64> = grad_out
        .iter()
        .zip(&cache.normalized)
        .map(|(g, nh)| g * nh)
        .collect();
    // h = grad_out * gain; dx = inv_std * (h - mean(h) - normalized * mean(h * normalized))
    let h: Vec<f64> = grad_out.iter().zip(gain).map(|(g, w)| g * w).collect();
    let mean_h = h.iter().sum::<f64>() / n as f64;
    let mean_h_nh = h
        .iter()
        .zip(&cache.normalized)
        .map(|(v, nh)| v * nh)
        .sum::<f64>()
        / n as f64;
    let grad_x = h
        .iter()
        .zip(&cache.normalized)
        .map(|(v, nh)| cache.inv_std * (v - mean_h - nh * mean_h_nh))
        .collect();
    (grad_x, grad_gain, grad_bias)
}
