use crate::gcn::Prediction;
use crate::rng::Rng;

/// Unlabeled nodes whose confidence reaches the threshold, with their
/// predicted labels. `nodes` is sorted; `labels[j]` belongs to `nodes[j]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HighConfidenceSet {
    pub nodes: Vec<usize>,
    pub labels: Vec<usize>,
}

impl HighConfidenceSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `{u ∉ labeled | conf_u ≥ θ}` with argmax labels attached.
pub fn high_confidence_set(pred: &Prediction, theta: f64, is_labeled: &[bool]) -> HighConfidenceSet {
    let mut set = HighConfidenceSet::default();
    for (u, &conf) in pred.confidence.iter().enumerate() {
        if !is_labeled[u] && conf >= theta {
            set.nodes.push(u);
            set.labels.push(pred.labels[u]);
        }
    }
    set
}

/// The k high-confidence sets together with their intersection and union.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoLabelSets {
    pub per_model: Vec<HighConfidenceSet>,
    /// Nodes present in every set. In label-aware mode the sets must also
    /// assign the same label.
    pub intersection: Vec<usize>,
    pub union: Vec<usize>,
}

impl PseudoLabelSets {
    pub fn new(per_model: Vec<HighConfidenceSet>, num_nodes: usize, label_aware: bool) -> Self {
        let k = per_model.len();
        let mut count = vec![0usize; num_nodes];
        // First label seen per node, and whether every later set agreed with it.
        let mut label: Vec<Option<usize>> = vec![None; num_nodes];
        let mut consistent = vec![true; num_nodes];
        for set in &per_model {
            for (&u, &l) in set.nodes.iter().zip(&set.labels) {
                count[u] += 1;
                match label[u] {
                    None => label[u] = Some(l),
                    Some(first) if first != l => consistent[u] = false,
                    _ => {}
                }
            }
        }
        let union: Vec<usize> = (0..num_nodes).filter(|&u| count[u] > 0).collect();
        let intersection = union
            .iter()
            .copied()
            .filter(|&u| count[u] == k && (!label_aware || consistent[u]))
            .collect();
        Self {
            per_model,
            intersection,
            union,
        }
    }
}

/// `|H_∩| / |H_∪|`, and 0 when the union is empty.
pub fn agreement_ratio(sets: &PseudoLabelSets) -> f64 {
    if sets.union.is_empty() {
        0.0
    } else {
        sets.intersection.len() as f64 / sets.union.len() as f64
    }
}

/// `clamp(θ + α·(s_prev − s_curr), θ_min, θ_max)`.
pub fn update_threshold(theta: f64, alpha: f64, s_prev: f64, s_curr: f64, theta_min: f64, theta_max: f64) -> f64 {
    (theta + alpha * (s_prev - s_curr)).clamp(theta_min, theta_max)
}

/// Nodes and labels for one training step. `labels` has one entry per graph
/// node but only entries at `nodes` are meaningful.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet {
    pub nodes: Vec<usize>,
    pub labels: Vec<usize>,
}

/// `L` with ground truth plus a uniform sample of `⌊fraction·|H|⌋` nodes of
/// `pseudo` with their pseudo-labels.
pub fn sample_training_set(
    labeled: &[usize],
    truth: &[usize],
    pseudo: &HighConfidenceSet,
    fraction: f64,
    rng: &mut Rng,
) -> TrainingSet {
    let mut labels = vec![0; truth.len()];
    let mut nodes = labeled.to_vec();
    for &u in labeled {
        labels[u] = truth[u];
    }
    let amount = ((fraction * pseudo.len() as f64).floor() as usize).min(pseudo.len());
    if amount > 0 {
        for j in rng.sample_indices(pseudo.len(), amount) {
            let u = pseudo.nodes[j];
            nodes.push(u);
            labels[u] = pseudo.labels[j];
        }
    }
    nodes.sort_unstable();
    TrainingSet { nodes, labels }
}

/// Nodes on which at least `⌈β·k⌉` models predict the same class.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsensusSet {
    /// Sorted member nodes.
    pub nodes: Vec<usize>,
    /// Majority label per member, parallel to `nodes`.
    pub labels: Vec<usize>,
    /// `Agree(u)` for every node of the graph.
    pub agree: Vec<usize>,
}

/// Smallest vote count that satisfies `Agree(u) ≥ β·k`. The small slack keeps
/// products such as `0.3 · 10` from rounding up past the intended integer.
pub fn required_votes(beta: f64, k: usize) -> usize {
    ((beta * k as f64 - 1e-9).ceil() as usize).max(1)
}

/// Majority vote over the models' argmax labels. Ties between classes with
/// the same vote count go to the higher mean probability, then the lower class.
pub fn consensus_vote(predictions: &[Prediction], beta: f64) -> ConsensusSet {
    let k = predictions.len();
    let n = predictions.first().map_or(0, Prediction::num_nodes);
    let classes = predictions.first().map_or(0, |p| p.probs.cols());
    let required = required_votes(beta, k);
    let mut votes = vec![0usize; classes];
    let mut out = ConsensusSet {
        nodes: Vec::new(),
        labels: Vec::new(),
        agree: Vec::with_capacity(n),
    };
    for u in 0..n {
        votes.iter_mut().for_each(|v| *v = 0);
        for p in predictions {
            votes[p.labels[u]] += 1;
        }
        let agree = *votes.iter().max().unwrap_or(&0);
        out.agree.push(agree);
        if agree < required {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for c in (0..classes).filter(|&c| votes[c] == agree) {
            let mass: f64 = predictions.iter().map(|p| p.probs.get(u, c)).sum();
            if best.is_none_or(|(_, m)| mass > m) {
                best = Some((c, mass));
            }
        }
        out.nodes.push(u);
        out.labels.push(best.expect("agree >= 1 implies a voted class").0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DenseMatrix;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};
    use std::collections::BTreeSet;

    fn set(nodes: &[usize]) -> HighConfidenceSet {
        HighConfidenceSet {
            nodes: nodes.to_vec(),
            labels: vec![0; nodes.len()],
        }
    }

    fn pred_from_labels(labels: &[usize], classes: usize) -> Prediction {
        let probs = DenseMatrix::from_fn(labels.len(), classes, |u, c| {
            if c == labels[u] {
                0.9
            } else {
                0.1 / (classes - 1) as f64
            }
        });
        Prediction::from_probs(probs)
    }

    #[test]
    fn high_confidence_filter() {
        let uniform = Prediction::from_probs(DenseMatrix::filled(5, 3, 1.0 / 3.0));
        assert!(high_confidence_set(&uniform, 0.9, &[false; 5]).is_empty());

        let probs = DenseMatrix::from_rows(&[[0.95, 0.05], [0.2, 0.8], [0.3, 0.7], [0.01, 0.99]]);
        let pred = Prediction::from_probs(probs);
        let h = high_confidence_set(&pred, 0.8, &[false, false, false, true]);
        assert_eq!(h.nodes, vec![0, 1]);
        assert_eq!(h.labels, vec![0, 1]);
    }

    #[test]
    fn agreement_ratio_examples() {
        let same = PseudoLabelSets::new(vec![set(&[1, 4]), set(&[1, 4]), set(&[1, 4])], 6, false);
        assert_eq!(agreement_ratio(&same), 1.0);
        let disjoint = PseudoLabelSets::new(vec![set(&[0, 1]), set(&[2])], 6, false);
        assert_eq!(agreement_ratio(&disjoint), 0.0);
        let mixed = PseudoLabelSets::new(vec![set(&[1, 2, 3]), set(&[2, 3, 4]), set(&[2, 3])], 6, false);
        assert_eq!(mixed.intersection, vec![2, 3]);
        assert_eq!(mixed.union, vec![1, 2, 3, 4]);
        assert_eq!(agreement_ratio(&mixed), 0.5);
        let empty = PseudoLabelSets::new(vec![set(&[]), set(&[])], 6, false);
        assert_eq!(agreement_ratio(&empty), 0.0);
    }

    #[test]
    fn label_aware_intersection_drops_disagreements() {
        let a = HighConfidenceSet {
            nodes: vec![1, 2],
            labels: vec![0, 1],
        };
        let b = HighConfidenceSet {
            nodes: vec![1, 2],
            labels: vec![0, 2],
        };
        let blind = PseudoLabelSets::new(vec![a.clone(), b.clone()], 3, false);
        let aware = PseudoLabelSets::new(vec![a, b], 3, true);
        assert_eq!(blind.intersection, vec![1, 2]);
        assert_eq!(aware.intersection, vec![1]);
        assert_eq!(aware.union, vec![1, 2]);
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(update_threshold(0.9, 0.1, 0.3, 0.3, 0.5, 0.99), 0.9);
        assert!((update_threshold(0.95, 0.1, 0.2, 0.5, 0.5, 0.99) - 0.92).abs() < 1e-15);
        assert!((update_threshold(0.505, 0.1, 0.9, 0.2, 0.5, 0.99) - 0.575).abs() < 1e-15);
        assert_eq!(update_threshold(0.505, 0.1, 0.2, 0.9, 0.5, 0.99), 0.5);
        assert_eq!(update_threshold(0.98, 0.1, 0.9, 0.0, 0.5, 0.99), 0.99);
    }

    #[test]
    fn training_set_extremes() {
        let truth = vec![0, 1, 2, 0, 1, 2, 0, 1];
        let pseudo = HighConfidenceSet {
            nodes: vec![2, 4, 5, 7],
            labels: vec![1, 1, 0, 0],
        };
        let mut rng = Rng::seed_from(1);
        let none = sample_training_set(&[0, 3], &truth, &pseudo, 0.0, &mut rng);
        assert_eq!(none.nodes, vec![0, 3]);
        let all = sample_training_set(&[0, 3], &truth, &pseudo, 1.0, &mut rng);
        assert_eq!(all.nodes, vec![0, 2, 3, 4, 5, 7]);
        // Pseudo-labels, not ground truth, on the pseudo nodes.
        assert_eq!((all.labels[2], all.labels[5], all.labels[7]), (1, 0, 0));
        assert_eq!((all.labels[0], all.labels[3]), (0, 0));
    }

    #[test]
    fn subset_sampling_is_uniform() {
        let pseudo = HighConfidenceSet {
            nodes: (0..100).collect(),
            labels: vec![0; 100],
        };
        let truth = vec![0; 100];
        let mut rng = Rng::seed_from(7);
        let mut hits = [0u32; 100];
        let trials = 10_000;
        for _ in 0..trials {
            let t = sample_training_set(&[], &truth, &pseudo, 0.5, &mut rng);
            assert_eq!(t.nodes.len(), 50);
            t.nodes.iter().for_each(|&u| hits[u] += 1);
        }
        for (u, &h) in hits.iter().enumerate() {
            let f = h as f64 / trials as f64;
            assert!((f - 0.5).abs() < 0.02, "node {u}: {f}");
        }
    }

    #[test]
    fn vote_examples() {
        let k5: Vec<_> = (0..5).map(|_| pred_from_labels(&[2], 3)).collect();
        let c = consensus_vote(&k5, 1.0);
        assert_eq!((c.nodes.clone(), c.labels.clone()), (vec![0], vec![2]));

        let k4: Vec<_> = [2, 2, 2, 0].iter().map(|&l| pred_from_labels(&[l], 3)).collect();
        assert!(consensus_vote(&k4, 1.0).nodes.is_empty());
        assert_eq!(consensus_vote(&k4, 1.0).agree, vec![3]);

        let k6: Vec<_> = [1, 1, 1, 0, 0, 2].iter().map(|&l| pred_from_labels(&[l], 3)).collect();
        let c = consensus_vote(&k6, 0.5);
        assert_eq!((c.nodes, c.labels, c.agree), (vec![0], vec![1], vec![3]));
    }

    #[test]
    fn vote_ties_use_probability_mass_then_class() {
        let p = |row: [f64; 3]| Prediction::from_probs(DenseMatrix::from_rows(&[row]));
        // Two votes each for classes 0 and 2; class 2 carries more mass.
        let preds = [
            p([0.5, 0.1, 0.4]),
            p([0.6, 0.0, 0.4]),
            p([0.1, 0.4, 0.5]),
            p([0.0, 0.3, 0.7]),
        ];
        assert_eq!(consensus_vote(&preds, 0.5).labels, vec![2]);
        // Equal mass falls back to the lower class.
        let preds = [p([0.6, 0.4, 0.0]), p([0.4, 0.6, 0.0])];
        assert_eq!(consensus_vote(&preds, 0.5).labels, vec![0]);
    }

    #[test]
    fn required_votes_is_ceiling() {
        assert_eq!(required_votes(1.0, 10), 10);
        assert_eq!(required_votes(0.3, 10), 3);
        assert_eq!(required_votes(0.5, 5), 3);
        assert_eq!(required_votes(0.01, 4), 1);
    }

    proptest! {
        #[test]
        fn theta_stays_clamped(theta in 0.5f64..=0.99, alpha in 0.0f64..5.0,
                               s in proptest::collection::vec(0.0f64..=1.0, 2..40)) {
            let mut t = theta;
            for w in s.windows(2) {
                t = update_threshold(t, alpha, w[0], w[1], 0.5, 0.99);
                prop_assert!((0.5..=0.99).contains(&t));
            }
        }

        #[test]
        fn threshold_is_monotone_in_current_agreement(theta in 0.5f64..=0.99, alpha in 0.0f64..1.0,
                                                      prev in 0.0f64..=1.0, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(update_threshold(theta, alpha, prev, hi, 0.5, 0.99)
                <= update_threshold(theta, alpha, prev, lo, 0.5, 0.99));
        }

        #[test]
        fn set_algebra_matches_btreesets(sets in proptest::collection::vec(
            proptest::collection::btree_set(0usize..30, 0..20), 1..6)) {
            let hs: Vec<_> = sets.iter().map(|s| set(&s.iter().copied().collect::<Vec<_>>())).collect();
            let p = PseudoLabelSets::new(hs, 30, false);
            let union: BTreeSet<usize> = sets.iter().flatten().copied().collect();
            let inter: BTreeSet<usize> = union.iter().copied().filter(|u| sets.iter().all(|s| s.contains(u))).collect();
            prop_assert_eq!(&p.union, &union.iter().copied().collect::<Vec<_>>());
            prop_assert_eq!(&p.intersection, &inter.iter().copied().collect::<Vec<_>>());
            for (s, h) in sets.iter().zip(&p.per_model) {
                prop_assert!(p.intersection.iter().all(|u| h.nodes.contains(u)));
                prop_assert!(s.iter().all(|u| union.contains(u)));
            }
            let s = agreement_ratio(&p);
            prop_assert!((0.0..=1.0).contains(&s));
        }

        #[test]
        fn labeled_nodes_never_pseudo_labeled(conf in proptest::collection::vec(0.3f64..1.0, 1..40),
                                             labeled in proptest::collection::vec(any::<bool>(), 40),
                                             theta in 0.5f64..0.99) {
            let n = conf.len();
            let probs = DenseMatrix::from_fn(n, 2, |u, c| if c == 0 { conf[u] } else { 1.0 - conf[u] });
            let pred = Prediction::from_probs(probs);
            let h = high_confidence_set(&pred, theta, &labeled[..n]);
            prop_assert!(h.nodes.iter().all(|&u| !labeled[u]));
            let brute: Vec<usize> = (0..n).filter(|&u| !labeled[u] && pred.confidence[u] >= theta).collect();
            prop_assert_eq!(h.nodes, brute);
        }

        #[test]
        fn unanimous_vote_matches_brute_force(k in 1usize..=5, n in 1usize..=50, seed in any::<u64>()) {
            let mut rng = Rng::seed_from(seed);
            let preds: Vec<_> = (0..k)
                .map(|_| pred_from_labels(&(0..n).map(|_| rng.below(2)).collect::<Vec<_>>(), 3))
                .collect();
            let c = consensus_vote(&preds, 1.0);
            let brute: Vec<usize> = (0..n).filter(|&u| preds.iter().all(|p| p.labels[u] == preds[0].labels[u])).collect();
            prop_assert_eq!(&c.nodes, &brute);
            for (&u, &l) in c.nodes.iter().zip(&c.labels) {
                prop_assert_eq!(l, preds[0].labels[u]);
            }
        }
    }
}
