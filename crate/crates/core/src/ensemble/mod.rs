//! Agreement-adaptive ensemble training.
//!
//! Each epoch the `k` members predict on their own edge-dropped views. Their
//! high-confidence sets give an agreement ratio `S = |H_∩| / |H_∪|`, which
//! sizes each member's pseudo-labeled training sample and moves the
//! confidence threshold. A majority vote over the same predictions labels the
//! nodes the consensus model trains on.

mod sets;
mod trainer;

pub use sets::{
    agreement_ratio, consensus_vote, high_confidence_set, required_votes, sample_training_set, update_threshold,
    ConsensusSet, HighConfidenceSet, PseudoLabelSets, TrainingSet,
};
pub use trainer::{
    run_trial, train_plain_gcn, EnsembleEpoch, EnsembleParams, EnsembleState, EpochMetrics, ModelParams, TrialResult,
};

use crate::augment::AugmentError;
use crate::gcn::GcnError;
use crate::graph::GraphError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnsembleError {
    #[error("invalid ensemble parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Gcn(#[from] GcnError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}
