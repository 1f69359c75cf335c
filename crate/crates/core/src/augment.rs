//! Edge-drop augmentation: independent random subgraphs of the input graph.

use crate::graph::{build_graph, EdgeList, GraphError, SparseGraph};
use crate::rng::{Purpose, Rng};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AugmentError {
    #[error("edge drop probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("need at least one view")]
    NoViews,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Keeps each undirected edge iff its uniform draw `z` satisfies `z > p_drop`.
/// One draw per pair, so both directions survive or vanish together.
pub fn edge_drop(edges: &EdgeList, p_drop: f64, rng: &mut Rng) -> Result<EdgeList, AugmentError> {
    if !(0.0..=1.0).contains(&p_drop) {
        return Err(AugmentError::InvalidProbability(p_drop));
    }
    let kept = edges.iter().filter(|_| rng.uniform() > p_drop).collect();
    Ok(EdgeList::from_canonical(kept))
}

/// `k` normalized views, view `i` drawn from its own substream of `seed`.
pub fn make_views(
    edges: &EdgeList,
    num_nodes: usize,
    k: usize,
    p_drop: f64,
    seed: u64,
) -> Result<Vec<SparseGraph>, AugmentError> {
    if k == 0 {
        return Err(AugmentError::NoViews);
    }
    (0..k)
        .map(|i| {
            let mut rng = Rng::substream(seed, i as u64, Purpose::EdgeDrop);
            let kept = edge_drop(edges, p_drop, &mut rng)?;
            Ok(build_graph(num_nodes, &kept)?.normalize())
        })
        .collect()
}
