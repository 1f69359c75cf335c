use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, Split};
use crate::graph::EdgeList;
use crate::numerics::DenseMatrix;
use crate::rng::{Purpose, Rng};

/// Planted-partition graph with class-centroid features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SbmSpec {
    pub num_nodes: usize,
    pub num_classes: usize,
    pub p_intra: f64,
    pub p_inter: f64,
    pub feature_dim: usize,
    pub feature_noise: f64,
    #[serde(default = "default_train_per_class")]
    pub train_per_class: usize,
    #[serde(default = "default_val_size")]
    pub val_size: usize,
}

fn default_train_per_class() -> usize {
    20
}

fn default_val_size() -> usize {
    500
}

impl SbmSpec {
    /// The 400-node, 4-class desk-scale fixture. 64 feature dimensions, of
    /// which only the class coordinate carries signal, leave 20 labels per
    /// class short of what the weights need.
    pub fn fixture() -> Self {
        Self {
            num_nodes: 400,
            num_classes: 4,
            p_intra: 0.05,
            p_inter: 0.005,
            feature_dim: 64,
            feature_noise: 1.0,
            train_per_class: default_train_per_class(),
            val_size: default_val_size(),
        }
    }

    /// Class of node `u`: contiguous blocks whose sizes differ by at most one.
    pub fn class_of(&self, u: usize) -> usize {
        u * self.num_classes / self.num_nodes
    }

    fn check(&self) -> Result<(), DataError> {
        let bad = |msg: String| Err(DataError::InvalidParameter(msg));
        for (name, p) in [("p_intra", self.p_intra), ("p_inter", self.p_inter)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} outside [0, 1]"));
            }
        }
        if self.num_classes == 0 || self.num_nodes < self.num_classes {
            return bad(format!(
                "{} nodes cannot hold {} classes",
                self.num_nodes, self.num_classes
            ));
        }
        if self.feature_dim < self.num_classes {
            return bad(format!(
                "feature_dim {} smaller than num_classes {}",
                self.feature_dim, self.num_classes
            ));
        }
        if !(self.feature_noise >= 0.0 && self.feature_noise.is_finite()) {
            return bad(format!("feature_noise {} must be finite and >= 0", self.feature_noise));
        }
        Ok(())
    }
}

/// Samples a dataset from `spec`. Graph, features and split come from
/// separate substreams of `seed`.
pub fn generate_sbm(spec: &SbmSpec, seed: u64) -> Result<Dataset, DataError> {
    spec.check()?;
    let n = spec.num_nodes;
    let labels: Vec<usize> = (0..n).map(|u| spec.class_of(u)).collect();

    let mut rng = Rng::substream(seed, 0, Purpose::GraphGeneration);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if labels[u] == labels[v] {
                spec.p_intra
            } else {
                spec.p_inter
            };
            if rng.uniform() < p {
                edges.push((u, v));
            }
        }
    }

    let mut rng = Rng::substream(seed, 0, Purpose::FeatureNoise);
    let features = DenseMatrix::from_fn(n, spec.feature_dim, |u, c| {
        let centroid = if c == labels[u] { 1.0 } else { 0.0 };
        centroid + spec.feature_noise * rng.standard_normal()
    });

    let mut rng = Rng::substream(seed, 0, Purpose::Split);
    let split = standard_split(&labels, spec.num_classes, spec.train_per_class, spec.val_size, &mut rng)?;

    Ok(Dataset {
        num_nodes: n,
        num_classes: spec.num_classes,
        edges: EdgeList::from_canonical(edges),
        reported_edges: None,
        features,
        labels,
        split,
    })
}

/// `per_class` random training nodes per class; of the rest, a random
/// validation set of `min(val_size, remaining / 5)` nodes; everything else is test.
pub(crate) fn standard_split(
    labels: &[usize],
    num_classes: usize,
    per_class: usize,
    val_size: usize,
    rng: &mut Rng,
) -> Result<Split, DataError> {
    let mut train = Vec::new();
    for class in 0..num_classes {
        let members: Vec<usize> = (0..labels.len()).filter(|&u| labels[u] == class).collect();
        if members.len() < per_class {
            return Err(DataError::NotEnoughNodes {
                class,
                available: members.len(),
                requested: per_class,
            });
        }
        train.extend(
            rng.sample_indices(members.len(), per_class)
                .into_iter()
                .map(|i| members[i]),
        );
    }
    train.sort_unstable();
    let mut in_train = vec![false; labels.len()];
    train.iter().for_each(|&u| in_train[u] = true);
    let mut rest: Vec<usize> = (0..labels.len()).filter(|&u| !in_train[u]).collect();
    rng.shuffle(&mut rest);
    let n_val = val_size.min(rest.len() / 5);
    let mut val = rest[..n_val].to_vec();
    let mut test = rest[n_val..].to_vec();
    val.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, val, test })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_inter_edges_when_p_inter_is_zero() {
        let spec = SbmSpec {
            p_inter: 0.0,
            ..SbmSpec::fixture()
        };
        let d = generate_sbm(&spec, 1).unwrap();
        assert_eq!(d.inter_class_edges(), 0);
        assert!(!d.edges.is_empty());
        d.validate().unwrap();
    }

    #[test]
    fn edge_count_within_three_sigma() {
        // Each class has m = 100 nodes: C·C(m,2) intra pairs, C(N,2) - that inter pairs.
        let spec = SbmSpec::fixture();
        let intra_pairs = 4.0 * (100.0 * 99.0 / 2.0);
        let inter_pairs = 400.0 * 399.0 / 2.0 - intra_pairs;
        let mean = intra_pairs * 0.05 + inter_pairs * 0.005;
        let var = intra_pairs * 0.05 * 0.95 + inter_pairs * 0.005 * 0.995;
        for seed in 0..5 {
            let d = generate_sbm(&spec, seed).unwrap();
            let z = (d.edges.len() as f64 - mean) / var.sqrt();
            assert!(z.abs() < 3.0, "seed {seed}: {} edges, z = {z}", d.edges.len());
        }
    }

    #[test]
    fn split_shape() {
        let d = generate_sbm(&SbmSpec::fixture(), 3).unwrap();
        assert_eq!(d.split.train.len(), 80);
        assert_eq!(d.split.val.len(), 64);
        assert_eq!(d.split.test.len(), 256);
        assert_eq!(d.class_sizes(), vec![100; 4]);
        for c in 0..4 {
            assert_eq!(d.split.train.iter().filter(|&&u| d.labels[u] == c).count(), 20);
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let spec = SbmSpec::fixture();
        assert_eq!(generate_sbm(&spec, 9).unwrap(), generate_sbm(&spec, 9).unwrap());
        assert_ne!(
            generate_sbm(&spec, 9).unwrap().edges,
            generate_sbm(&spec, 10).unwrap().edges
        );
    }

    #[test]
    fn rejects_invalid_parameters() {
        let bad = |f: fn(&mut SbmSpec)| {
            let mut s = SbmSpec::fixture();
            f(&mut s);
            generate_sbm(&s, 0).is_err()
        };
        assert!(bad(|s| s.p_intra = 1.5));
        assert!(bad(|s| s.p_inter = -0.1));
        assert!(bad(|s| s.feature_dim = 2));
        assert!(bad(|s| s.train_per_class = 200));
    }
}
