//! Reverse-mode autodiff over the encoder's small operation set.
//!
//! The tape records vector nodes (embedding lookups, means, the aggregation
//! matvec, layer norm) and scalar nodes (dot products, the contrastive loss,
//! weighted sums). Forward values are computed with the same kernels in
//! [`crate::linalg`] that the plain encoder uses, so tape and non-tape
//! forward passes agree bit for bit.

use crate::linalg::{self, LayerNormCache};
use crate::params::EncoderParams;
use std::collections::HashMap;

/// Handle to a vector-valued node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

impl NodeId {
    /// Position on the tape; the adjoint table returned by
    /// [`Tape::backward_with_adjoints`] indexes by it.
    pub fn index(self) -> usize {
        self.0
    }
}

/// Handle to a scalar-valued node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ScalarId(usize);

enum VecOp {
    /// Fixed input; gradients stop here.
    Const,
    /// Row lookup in the embedding table.
    Embed(u32),
    /// Arithmetic mean of earlier nodes.
    Mean(Vec<NodeId>),
    /// Elementwise sum.
    Add(NodeId, NodeId),
    /// `agg_w * x`.
    MatVec(NodeId),
    /// Layer norm with the learned gain and bias.
    LayerNorm { input: NodeId, cache: LayerNormCache },
}

struct VecNode {
    op: VecOp,
    value: Vec<f64>,
}

enum ScalarOp {
    Dot(NodeId, NodeId),
    /// Contrastive loss over `scores`, where `scores[0]` is the positive.
    /// `probs` are the softmax probabilities of `scores / tau`, cached by
    /// the forward pass.
    InfoNce {
        scores: Vec<ScalarId>,
        probs: Vec<f64>,
        tau: f64,
    },
    WeightedSum(Vec<(ScalarId, f64)>),
}

struct ScalarNode {
    op: ScalarOp,
    value: f64,
}

/// Gradients of one scalar with respect to the encoder parameters.
///
/// Embedding gradients are sparse: only rows that appeared on the tape get
/// an entry.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub embedding: HashMap<u32, Vec<f64>>,
    pub agg_w: Vec<f64>,
    pub ln_gain: Vec<f64>,
    pub ln_bias: Vec<f64>,
}

impl Gradients {
    pub fn zeros(dim: usize) -> Gradients {
        Gradients {
            embedding: HashMap::new(),
            agg_w: vec![0.0; dim * dim],
            ln_gain: vec![0.0; dim],
            ln_bias: vec![0.0; dim],
        }
    }

    /// Largest absolute entry across all parameter gradients.
    pub fn max_abs(&self) -> f64 {
        let dense = self
            .agg_w
            .iter()
            .chain(&self.ln_gain)
            .chain(&self.ln_bias)
            .map(|v| v.abs())
            .fold(0.0f64, f64::max);
        self.embedding
            .values()
            .flatten()
            .map(|v| v.abs())
            .fold(dense, f64::max)
    }
}

/// Wengert-list autodiff tape borrowing the parameters it differentiates.
pub struct Tape<'p> {
    params: &'p EncoderParams,
    nodes: Vec<VecNode>,
    scalars: Vec<ScalarNode>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p EncoderParams) -> Tape<'p> {
        Tape {
            params,
            nodes: Vec::new(),
            scalars: Vec::new(),
        }
    }

    pub fn params(&self) -> &EncoderParams {
        self.params
    }

    fn push(&mut self, op: VecOp, value: Vec<f64>) -> NodeId {
        debug_assert_eq!(value.len(), self.params.dim);
        self.nodes.push(VecNode { op, value });
        NodeId(self.nodes.len() - 1)
    }

    fn push_scalar(&mut self, op: ScalarOp, value: f64) -> ScalarId {
        self.scalars.push(ScalarNode { op, value });
        ScalarId(self.scalars.len() - 1)
    }

    /// A fixed vector; no gradient flows into it.
    pub fn constant(&mut self, value: Vec<f64>) -> NodeId {
        self.push(VecOp::Const, value)
    }

    /// Embedding lookup for one token id.
    pub fn embed(&mut self, token: u32) -> NodeId {
        let value = self.params.embedding_row(token).to_vec();
        self.push(VecOp::Embed(token), value)
    }

    /// Mean of one or more nodes.
    pub fn mean(&mut self, xs: &[NodeId]) -> NodeId {
        assert!(!xs.is_empty(), "mean of zero nodes is undefined");
        let value = {
            let rows: Vec<&[f64]> = xs.iter().map(|id| self.nodes[id.0].value.as_slice()).collect();
            linalg::mean_rows(&rows)
        };
        self.push(VecOp::Mean(xs.to_vec()), value)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = linalg::add(&self.nodes[a.0].value, &self.nodes[b.0].value);
        self.push(VecOp::Add(a, b), value)
    }

    /// Multiplies by the aggregation matrix `agg_w`.
    pub fn matvec(&mut self, x: NodeId) -> NodeId {
        let value = linalg::matvec(&self.params.agg_w, self.params.dim, &self.nodes[x.0].value);
        self.push(VecOp::MatVec(x), value)
    }

    /// Layer norm with the learned affine parameters.
    pub fn layer_norm(&mut self, x: NodeId) -> NodeId {
        let (value, cache) =
            linalg::layer_norm(&self.nodes[x.0].value, &self.params.ln_gain, &self.params.ln_bias);
        self.push(VecOp::LayerNorm { input: x, cache }, value)
    }

    pub fn dot(&mut self, a: NodeId, b: NodeId) -> ScalarId {
        let value = linalg::dot(&self.nodes[a.0].value, &self.nodes[b.0].value);
        self.push_scalar(ScalarOp::Dot(a, b), value)
    }

    /// Contrastive loss `-log softmax(positive / tau)` against the negative
    /// scores, stabilized by max subtraction.
    pub fn info_nce(&mut self, positive: ScalarId, negatives: &[ScalarId], tau: f64) -> ScalarId {
        assert!(tau > 0.0, "temperature must be positive");
        let mut scores = Vec::with_capacity(negatives.len() + 1);
        scores.push(positive);
        scores.extend_from_slice(negatives);
        let z: Vec<f64> = scores.iter().map(|s| self.scalars[s.0].value / tau).collect();
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
        let sum: f64 = exps.iter().sum();
        let probs: Vec<f64> = exps.iter().map(|e| e / sum).collect();
        let value = m + sum.ln() - z[0];
        self.push_scalar(ScalarOp::InfoNce { scores, probs, tau }, value)
    }

    /// `sum_i weight_i * scalar_i`, summed in argument order.
    pub fn weighted_sum(&mut self, terms: &[(ScalarId, f64)]) -> ScalarId {
        let value = terms.iter().map(|(s, w)| self.scalars[s.0].value * w).sum();
        self.push_scalar(ScalarOp::WeightedSum(terms.to_vec()), value)
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.nodes[id.0].value
    }

    pub fn scalar_value(&self, id: ScalarId) -> f64 {
        self.scalars[id.0].value
    }

    /// Gradients of `root` with respect to the parameters.
    pub fn backward(&self, root: ScalarId) -> Gradients {
        self.backward_with_adjoints(root).0
    }

    /// Like [`Tape::backward`], also returning the adjoint of every vector
    /// node, indexed by `NodeId`. Adjoints of unreached nodes are empty.
    pub fn backward_with_adjoints(&self, root: ScalarId) -> (Gradients, Vec<Vec<f64>>) {
        let dim = self.params.dim;
        let mut grads = Gradients::zeros(dim);
        let mut sadj = vec![0.0; self.scalars.len()];
        let mut vadj: Vec<Vec<f64>> = vec![Vec::new(); self.nodes.len()];
        sadj[root.0] = 1.0;

        fn accum(vadj: &mut [Vec<f64>], id: NodeId, dim: usize, scale: f64, v: &[f64]) {
            if vadj[id.0].is_empty() {
                vadj[id.0] = vec![0.0; dim];
            }
            linalg::axpy(&mut vadj[id.0], scale, v);
        }

        // Scalars never feed vector nodes, so all scalar adjoints settle
        // before the vector sweep.
        for i in (0..self.scalars.len()).rev() {
            let g = sadj[i];
            if g == 0.0 {
                continue;
            }
            match &self.scalars[i].op {
                ScalarOp::Dot(a, b) => {
                    let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    accum(&mut vadj, *a, dim, g, vb);
                    accum(&mut vadj, *b, dim, g, va);
                }
                ScalarOp::InfoNce { scores, probs, tau } => {
                    for (k, sid) in scores.iter().enumerate() {
                        let coeff = if k == 0 { probs[0] - 1.0 } else { probs[k] };
                        sadj[sid.0] += g * coeff / tau;
                    }
                }
                ScalarOp::WeightedSum(terms) => {
                    for (sid, w) in terms {
                        sadj[sid.0] += g * w;
                    }
                }
            }
        }

        for i in (0..self.nodes.len()).rev() {
            if vadj[i].is_empty() {
                continue;
            }
            let g = std::mem::take(&mut vadj[i]);
            match &self.nodes[i].op {
                VecOp::Const => {}
                VecOp::Embed(token) => {
                    let row = grads.embedding.entry(*token).or_insert_with(|| vec![0.0; dim]);
                    linalg::axpy(row, 1.0, &g);
                }
                VecOp::Mean(children) => {
                    let inv = 1.0 / children.len() as f64;
                    for c in children {
                        accum(&mut vadj, *c, dim, inv, &g);
                    }
                }
                VecOp::Add(a, b) => {
                    accum(&mut vadj, *a, dim, 1.0, &g);
                    accum(&mut vadj, *b, dim, 1.0, &g);
                }
                VecOp::MatVec(x) => {
                    let xv = self.nodes[x.0].value.clone();
                    for r in 0..dim {
                        for c in 0..dim {
                            grads.agg_w[r * dim + c] += g[r] * xv[c];
                        }
                    }
                    let mut gx = vec![0.0; dim];
                    for r in 0..dim {
                        let w_row = &self.params.agg_w[r * dim..(r + 1) * dim];
                        linalg::axpy(&mut gx, g[r], w_row);
                    }
                    accum(&mut vadj, *x, dim, 1.0, &gx);
                }
                VecOp::LayerNorm { input, cache } => {
                    let (gx, gg, gb) = linalg::layer_norm_backward(&g, cache, &self.params.ln_gain);
                    linalg::axpy(&mut grads.ln_gain, 1.0, &gg);
                    linalg::axpy(&mut grads.ln_bias, 1.0, &gb);
                    accum(&mut vadj, *input, dim, 1.0, &gx);
                }
            }
            // Keep the adjoint available for callers that asked for it.
            vadj[i] = g;
        }

        (grads, vadj)
    }
}
