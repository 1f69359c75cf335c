use std::collections::HashSet;

use super::{DataError, Dataset, Split};
use crate::graph::EdgeList;
use crate::rng::{Purpose, Rng};

/// Replaces the training set with exactly `per_class` random nodes per class.
///
/// The validation set is kept; training nodes are drawn from the non-validation
/// nodes and every remaining node becomes a test node.
pub fn make_label_rate_split(dataset: &Dataset, per_class: usize, seed: u64) -> Result<Dataset, DataError> {
    if per_class == 0 {
        return Err(DataError::InvalidParameter("per_class must be at least 1".into()));
    }
    let mut rng = Rng::substream(seed, per_class as u64, Purpose::Split);
    let mut in_val = vec![false; dataset.num_nodes];
    dataset.split.val.iter().for_each(|&u| in_val[u] = true);

    let mut train = Vec::with_capacity(per_class * dataset.num_classes);
    for class in 0..dataset.num_classes {
        let candidates: Vec<usize> = (0..dataset.num_nodes)
            .filter(|&u| dataset.labels[u] == class && !in_val[u])
            .collect();
        if candidates.len() < per_class {
            return Err(DataError::NotEnoughNodes {
                class,
                available: candidates.len(),
                requested: per_class,
            });
        }
        train.extend(
            rng.sample_indices(candidates.len(), per_class)
                .into_iter()
                .map(|i| candidates[i]),
        );
    }
    train.sort_unstable();
    let mut in_train = vec![false; dataset.num_nodes];
    train.iter().for_each(|&u| in_train[u] = true);
    let test = (0..dataset.num_nodes).filter(|&u| !in_train[u] && !in_val[u]).collect();

    Ok(Dataset {
        split: Split {
            train,
            val: dataset.split.val.clone(),
            test,
        },
        ..dataset.clone()
    })
}

/// Removes every inter-class edge, then adds `⌊q·|E_clean|⌋` distinct random
/// inter-class edges, where `E_clean` is the surviving intra-class edge set.
pub fn inject_noisy_edges(dataset: &Dataset, q: f64, seed: u64) -> Result<Dataset, DataError> {
    if !(q >= 0.0 && q.is_finite()) {
        return Err(DataError::InvalidParameter(format!(
            "noise ratio q = {q} must be finite and >= 0"
        )));
    }
    let labels = &dataset.labels;
    let clean: Vec<(usize, usize)> = dataset.edges.iter().filter(|&(u, v)| labels[u] == labels[v]).collect();
    let wanted = (q * clean.len() as f64).floor() as usize;

    let sizes = dataset.class_sizes();
    let total: usize = sizes.iter().sum();
    let available = (total * total - sizes.iter().map(|s| s * s).sum::<usize>()) / 2;
    if wanted > available {
        return Err(DataError::NoisyEdgesExhausted {
            requested: wanted,
            available,
        });
    }

    let mut rng = Rng::substream(seed, q.to_bits(), Purpose::NoisyEdges);
    let n = dataset.num_nodes;
    let added: Vec<(usize, usize)> = if 2 * wanted <= available {
        // Rejection sampling over ordered pairs is uniform over unordered
        // inter-class pairs.
        let mut chosen = HashSet::with_capacity(wanted);
        let mut order = Vec::with_capacity(wanted);
        while order.len() < wanted {
            let (u, v) = (rng.below(n), rng.below(n));
            if labels[u] != labels[v] && chosen.insert((u.min(v), u.max(v))) {
                order.push((u.min(v), u.max(v)));
            }
        }
        order
    } else {
        let all: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|&(u, v)| labels[u] != labels[v])
            .collect();
        rng.sample_indices(all.len(), wanted)
            .into_iter()
            .map(|i| all[i])
            .collect()
    };

    let edges = EdgeList::from_pairs(clean.into_iter().chain(added))?;
    Ok(Dataset {
        edges,
        reported_edges: None,
        ..dataset.clone()
    })
}
