//! Dense linear algebra, activations, loss, dropout and Adam.
//!
//! Everything here is a pure function of its inputs plus an explicit
//! [`Rng`](crate::rng::Rng); matrices are plain values.

mod adam;
mod features;
mod matrix;
mod ops;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use features::SparseFeatures;
pub use matrix::DenseMatrix;
pub use ops::{
    apply_dropout, check_dropout_rate, dropout, dropout_mask, glorot_init, masked_cross_entropy, relu, relu_backward,
    softmax_rows,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
pub struct ShapeError {
    pub op: &'static str,
    pub lhs: (usize, usize),
    pub rhs: (usize, usize),
}

impl ShapeError {
    pub fn new(op: &'static str, lhs: (usize, usize), rhs: (usize, usize)) -> Self {
        Self { op, lhs, rhs }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("dropout rate {0} outside [0, 1)")]
    InvalidDropout(f64),
    #[error("node {node} out of range for {rows} rows")]
    NodeOutOfRange { node: usize, rows: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
}
