//! Agreement-adaptive ensembles of graph convolutional networks for
//! semi-supervised node classification.
//!
//! `k` GCNs train on edge-dropped views of the input graph and pseudo-label
//! each other's confident predictions; a consensus GCN on the original graph
//! learns from the nodes they agree on.

pub mod augment;
pub mod config;
pub mod data;
pub mod ensemble;
pub mod experiment;
pub mod figures;
pub mod gcn;
pub mod graph;
pub mod numerics;
pub mod rng;
