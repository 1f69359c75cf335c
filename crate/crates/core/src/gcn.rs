//! Two-layer graph convolutional network with a hand-written backward pass.
//!
//! ```text
//! z1 = Â · x_in · W1        h1 = relu(z1)        h1_drop = dropout(h1)
//! z2 = Â · h1_drop · W2     probs = softmax(z2)
//! ```
//!
//! `x_in` is the (optionally dropped-out) input. Products are evaluated as
//! `Â · (x_in · W1)`, which is the same matrix but touches the sparse
//! features only once.

use crate::graph::{GraphError, SparseGraph};
use crate::numerics::{
    adam_step, apply_dropout, check_dropout_rate, dropout_mask, glorot_init, masked_cross_entropy, relu, relu_backward,
    softmax_rows, AdamConfig, AdamState, DenseMatrix, NumericsError, ShapeError, SparseFeatures,
};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GcnError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("features have {found} columns, model expects {expected}")]
    FeatureDim { expected: usize, found: usize },
    #[error("graph has {graph} nodes but features have {features} rows")]
    NodeCount { graph: usize, features: usize },
    #[error("forward cache does not match this model/graph")]
    CacheMismatch,
}

impl From<ShapeError> for GcnError {
    fn from(e: ShapeError) -> Self {
        GcnError::Numerics(e.into())
    }
}

/// Architecture and optimizer settings of one GCN.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GcnConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub num_classes: usize,
    pub dropout: f64,
    /// Also apply dropout to the input features.
    pub input_dropout: bool,
    pub lr: f64,
    /// Decoupled weight decay on W1 only.
    pub weight_decay: f64,
}

/// Dropout masks for one training forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutMasks {
    /// Per stored feature entry: 0 or `1/(1-p)`. `None` when input dropout is off.
    pub input_scales: Option<Vec<f64>>,
    /// 0/1 keep-mask over the hidden layer.
    pub hidden: DenseMatrix,
}

/// Intermediate values of a forward pass, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub x_in: SparseFeatures,
    pub z1: DenseMatrix,
    pub h1: DenseMatrix,
    pub h1_drop: DenseMatrix,
    pub hidden_mask: Option<DenseMatrix>,
    /// `Â · h1_drop`, the left factor of `z2`.
    pub agg_h1: DenseMatrix,
    pub z2: DenseMatrix,
    pub probs: DenseMatrix,
}

/// Predicted class, its probability, and the full distribution per node.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub labels: Vec<usize>,
    pub confidence: Vec<f64>,
    pub probs: DenseMatrix,
}

impl Prediction {
    /// Row-wise argmax (ties go to the lowest class) and max.
    pub fn from_probs(probs: DenseMatrix) -> Self {
        let mut labels = Vec::with_capacity(probs.rows());
        let mut confidence = Vec::with_capacity(probs.rows());
        for r in 0..probs.rows() {
            let (best, conf) =
                probs.row(r).iter().enumerate().fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (c, &p)| if p > acc.1 { (c, p) } else { acc },
                );
            labels.push(best);
            confidence.push(conf);
        }
        Self {
            labels,
            confidence,
            probs,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    /// Fraction of `nodes` whose predicted label equals `truth`.
    pub fn accuracy(&self, truth: &[usize], nodes: &[usize]) -> f64 {
        accuracy(&self.labels, truth, nodes)
    }
}

pub(crate) fn accuracy(predicted: &[usize], truth: &[usize], nodes: &[usize]) -> f64 {
    if nodes.is_empty() {
        return 0.0;
    }
    let correct = nodes.iter().filter(|&&u| predicted[u] == truth[u]).count();
    correct as f64 / nodes.len() as f64
}

/// One two-layer GCN with its optimizer state and private dropout stream.
#[derive(Clone, Debug)]
pub struct GcnModel {
    config: GcnConfig,
    pub w1: DenseMatrix,
    pub w2: DenseMatrix,
    pub adam1: AdamState,
    pub adam2: AdamState,
    rng: Rng,
}

impl GcnModel {
    /// Glorot-initialized model. `init` draws the weights; `dropout_rng` is
    /// kept by the model for its training-time masks.
    pub fn new(config: GcnConfig, init: &mut Rng, dropout_rng: Rng) -> Result<Self, GcnError> {
        check_dropout_rate(config.dropout)?;
        let w1 = glorot_init(config.input_dim, config.hidden_dim, init);
        let w2 = glorot_init(config.hidden_dim, config.num_classes, init);
        Ok(Self::with_weights(config, w1, w2, dropout_rng))
    }

    pub fn with_weights(config: GcnConfig, w1: DenseMatrix, w2: DenseMatrix, dropout_rng: Rng) -> Self {
        assert_eq!(w1.shape(), (config.input_dim, config.hidden_dim));
        assert_eq!(w2.shape(), (config.hidden_dim, config.num_classes));
        let adam = AdamConfig {
            lr: config.lr,
            ..AdamConfig::default()
        };
        let adam1 = AdamState::new(
            config.input_dim,
            config.hidden_dim,
            AdamConfig {
                weight_decay: config.weight_decay,
                ..adam
            },
        );
        let adam2 = AdamState::new(config.hidden_dim, config.num_classes, adam);
        Self {
            config,
            w1,
            w2,
            adam1,
            adam2,
            rng: dropout_rng,
        }
    }

    pub fn config(&self) -> &GcnConfig {
        &self.config
    }

    fn check_inputs(&self, g: &SparseGraph, x: &SparseFeatures) -> Result<(), GcnError> {
        if x.cols() != self.config.input_dim {
            return Err(GcnError::FeatureDim {
                expected: self.config.input_dim,
                found: x.cols(),
            });
        }
        if x.rows() != g.num_nodes() {
            return Err(GcnError::NodeCount {
                graph: g.num_nodes(),
                features: x.rows(),
            });
        }
        Ok(())
    }

    /// Draws fresh masks from the model's dropout stream.
    pub fn sample_masks(&mut self, x: &SparseFeatures) -> DropoutMasks {
        let p = self.config.dropout;
        let input_scales = (self.config.input_dropout && p > 0.0).then(|| x.dropout_scales(p, &mut self.rng));
        let hidden = dropout_mask(x.rows(), self.config.hidden_dim, p, &mut self.rng);
        DropoutMasks { input_scales, hidden }
    }

    /// Forward pass. `masks = None` is evaluation mode (no dropout, no RNG).
    pub fn forward(
        &self,
        g: &SparseGraph,
        x: &SparseFeatures,
        masks: Option<&DropoutMasks>,
    ) -> Result<ForwardCache, GcnError> {
        self.check_inputs(g, x)?;
        let x_in = match masks.and_then(|m| m.input_scales.as_ref()) {
            Some(scales) => x.scale_entries(scales),
            None => x.clone(),
        };
        let z1 = g.spmm(&x_in.matmul(&self.w1)?)?;
        let h1 = relu(&z1);
        let (h1_drop, hidden_mask) = match masks {
            Some(m) => (
                apply_dropout(&h1, &m.hidden, self.config.dropout)?,
                Some(m.hidden.clone()),
            ),
            None => (h1.clone(), None),
        };
        let agg_h1 = g.spmm(&h1_drop)?;
        let z2 = agg_h1.matmul(&self.w2)?;
        let probs = softmax_rows(&z2);
        Ok(ForwardCache {
            x_in,
            z1,
            h1,
            h1_drop,
            hidden_mask,
            agg_h1,
            z2,
            probs,
        })
    }

    /// Exact gradients of the loss with respect to `(W1, W2)`, given the
    /// gradient with respect to the logits `z2`.
    pub fn backward(
        &self,
        g: &SparseGraph,
        cache: &ForwardCache,
        grad_logits: &DenseMatrix,
    ) -> Result<(DenseMatrix, DenseMatrix), GcnError> {
        if grad_logits.shape() != cache.z2.shape()
            || cache.z1.cols() != self.config.hidden_dim
            || cache.z1.rows() != g.num_nodes()
        {
            return Err(GcnError::CacheMismatch);
        }
        let grad_w2 = cache.agg_h1.t_matmul(grad_logits)?;
        // Â is symmetric, so Âᵀ·G = Â·G.
        let mut grad_h1 = g.spmm(grad_logits)?.matmul_t(&self.w2)?;
        if let Some(mask) = &cache.hidden_mask {
            grad_h1 = apply_dropout(&grad_h1, mask, self.config.dropout)?;
        }
        let grad_z1 = relu_backward(&cache.z1, &grad_h1)?;
        // (Â·x_in)ᵀ·grad_z1 = x_inᵀ·(Â·grad_z1).
        let grad_w1 = cache.x_in.t_matmul(&g.spmm(&grad_z1)?)?;
        Ok((grad_w1, grad_w2))
    }

    /// One optimizer step on the masked nodes; returns the pre-step loss.
    /// An empty mask is a no-op.
    pub fn train_step(
        &mut self,
        g: &SparseGraph,
        x: &SparseFeatures,
        labels: &[usize],
        mask: &[usize],
    ) -> Result<f64, GcnError> {
        if mask.is_empty() {
            return Ok(0.0);
        }
        self.check_inputs(g, x)?;
        let masks = self.sample_masks(x);
        let cache = self.forward(g, x, Some(&masks))?;
        let (loss, grad_logits) = masked_cross_entropy(&cache.probs, labels, mask)?;
        let (grad_w1, grad_w2) = self.backward(g, &cache, &grad_logits)?;
        adam_step(&mut self.w1, &grad_w1, &mut self.adam1)?;
        adam_step(&mut self.w2, &grad_w2, &mut self.adam2)?;
        Ok(loss)
    }

    /// Evaluation-mode predictions.
    pub fn predict(&self, g: &SparseGraph, x: &SparseFeatures) -> Result<Prediction, GcnError> {
        Ok(Prediction::from_probs(self.forward(g, x, None)?.probs))
    }

    /// Evaluation-mode hidden layer `h1` (N × hidden_dim).
    pub fn hidden_embeddings(&self, g: &SparseGraph, x: &SparseFeatures) -> Result<DenseMatrix, GcnError> {
        Ok(self.forward(g, x, None)?.h1)
    }
}
