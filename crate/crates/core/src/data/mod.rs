//! Datasets: the on-disk bundle format, the planted-partition fixture,
//! split construction and structural perturbations.

mod bundle;
mod embeddings;
mod perturb;
mod sbm;

use std::path::PathBuf;

pub use bundle::{load_bundle, write_bundle};
pub use embeddings::{export_embeddings, read_embeddings, EmbeddingRow};
pub use perturb::{inject_noisy_edges, make_label_rate_split};
pub use sbm::{generate_sbm, SbmSpec};

use crate::graph::{EdgeList, GraphError};
use crate::numerics::{DenseMatrix, SparseFeatures};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("missing bundle file {0}")]
    MissingFile(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed {file} at line {line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("dimension mismatch in {file}: expected {expected} {what}, found {found}")]
    DimensionMismatch {
        file: String,
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("label {label} of node {node} outside 0..{num_classes}")]
    LabelOutOfRange {
        node: usize,
        label: usize,
        num_classes: usize,
    },
    #[error("node id {node} outside 0..{num_nodes} in {file}")]
    NodeOutOfRange {
        file: String,
        node: usize,
        num_nodes: usize,
    },
    #[error("edge {u},{v} at line {line} is not canonical (need u < v; directed or self-loop input is rejected)")]
    NonCanonicalEdge { line: usize, u: usize, v: usize },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("class {class} has {available} eligible nodes, {requested} requested")]
    NotEnoughNodes {
        class: usize,
        available: usize,
        requested: usize,
    },
    #[error("cannot add {requested} inter-class edges: only {available} distinct pairs exist")]
    NoisyEdgesExhausted { requested: usize, available: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Transductive train/validation/test node sets (sorted, disjoint).
#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// A node-classification dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub num_nodes: usize,
    pub num_classes: usize,
    pub edges: EdgeList,
    /// Edge count as published for the source dataset, if known. Source
    /// edge lists may repeat an undirected pair, so this can exceed `edges.len()`.
    pub reported_edges: Option<usize>,
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
    pub split: Split,
}

impl Dataset {
    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn sparse_features(&self, row_normalize: bool) -> SparseFeatures {
        let sparse = SparseFeatures::from_dense(&self.features);
        if row_normalize {
            sparse.row_normalized()
        } else {
            sparse
        }
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<(), DataError> {
        let n = self.num_nodes;
        if self.features.rows() != n {
            return Err(DataError::DimensionMismatch {
                file: "features.csv".into(),
                what: "rows",
                expected: n,
                found: self.features.rows(),
            });
        }
        if self.labels.len() != n {
            return Err(DataError::DimensionMismatch {
                file: "labels.csv".into(),
                what: "rows",
                expected: n,
                found: self.labels.len(),
            });
        }
        if !self.features.is_finite() {
            return Err(DataError::InvalidParameter("non-finite feature value".into()));
        }
        for (node, &label) in self.labels.iter().enumerate() {
            if label >= self.num_classes {
                return Err(DataError::LabelOutOfRange {
                    node,
                    label,
                    num_classes: self.num_classes,
                });
            }
        }
        self.edges.check_range(n)?;

        let mut owner = vec![None; n];
        for (name, nodes) in [
            ("train", &self.split.train),
            ("val", &self.split.val),
            ("test", &self.split.test),
        ] {
            for &u in nodes {
                if u >= n {
                    return Err(DataError::NodeOutOfRange {
                        file: "splits.json".into(),
                        node: u,
                        num_nodes: n,
                    });
                }
                if let Some(prev) = owner[u].replace(name) {
                    return Err(DataError::InvalidSplit(format!("node {u} in both {prev} and {name}")));
                }
            }
        }
        let mut seen = vec![false; self.num_classes];
        for &u in &self.split.train {
            seen[self.labels[u]] = true;
        }
        if let Some(c) = seen.iter().position(|&s| !s) {
            return Err(DataError::InvalidSplit(format!("class {c} has no training node")));
        }
        Ok(())
    }

    /// Node counts by class.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_classes];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Number of edges joining nodes of different classes.
    pub fn inter_class_edges(&self) -> usize {
        self.edges
            .iter()
            .filter(|&(u, v)| self.labels[u] != self.labels[v])
            .count()
    }

    /// One-line shape summary.
    pub fn shape_line(&self) -> String {
        let edges = match self.reported_edges {
            Some(r) if r != self.edges.len() => format!("{r} ({} unique undirected)", self.edges.len()),
            _ => self.edges.len().to_string(),
        };
        format!(
            "nodes={} edges={} features={} classes={} train={} val={} test={}",
            self.num_nodes,
            edges,
            self.feature_dim(),
            self.num_classes,
            self.split.train.len(),
            self.split.val.len(),
            self.split.test.len()
        )
    }
}
