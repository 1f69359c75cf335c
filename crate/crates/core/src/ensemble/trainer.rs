use rayon::prelude::*;
use serde::Serialize;

use super::sets::{
    agreement_ratio, consensus_vote, high_confidence_set, sample_training_set, update_threshold, ConsensusSet,
    PseudoLabelSets, TrainingSet,
};
use super::EnsembleError;
use crate::augment::make_views;
use crate::data::Dataset;
use crate::gcn::{accuracy, GcnConfig, GcnModel, Prediction};
use crate::graph::{build_graph, SparseGraph};
use crate::numerics::SparseFeatures;
use crate::rng::{Purpose, Rng, CONSENSUS_INDEX};

/// Per-network settings shared by ensemble members and the consensus model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelParams {
    pub hidden_dim: usize,
    pub dropout: f64,
    pub input_dropout: bool,
    pub lr: f64,
    pub weight_decay: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            hidden_dim: 16,
            dropout: 0.5,
            input_dropout: true,
            lr: 0.01,
            weight_decay: 5e-4,
        }
    }
}

impl ModelParams {
    pub fn gcn_config(&self, input_dim: usize, num_classes: usize) -> GcnConfig {
        GcnConfig {
            input_dim,
            hidden_dim: self.hidden_dim,
            num_classes,
            dropout: self.dropout,
            input_dropout: self.input_dropout,
            lr: self.lr,
            weight_decay: self.weight_decay,
        }
    }
}

/// Ensemble settings, already resolved from a variant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnsembleParams {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub p_drop: f64,
    pub theta_init: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    /// Update θ from the agreement ratio each epoch; otherwise θ stays at `theta_init`.
    pub adaptive_threshold: bool,
    /// Train each member on a `⌊S·|H|⌋` sample of its pseudo-set; otherwise on all of it.
    pub adaptive_sampling: bool,
    /// When off, members and the consensus model see only the labeled nodes.
    pub pseudo_labels: bool,
    /// Restrict consensus training to agreed nodes that are also high-confidence in every member.
    pub conservative: bool,
    pub label_aware_agreement: bool,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        Self {
            k: 10,
            alpha: 0.1,
            beta: 1.0,
            p_drop: 0.2,
            theta_init: 0.95,
            theta_min: 0.5,
            theta_max: 0.99,
            adaptive_threshold: true,
            adaptive_sampling: true,
            pseudo_labels: true,
            conservative: false,
            label_aware_agreement: false,
        }
    }
}

/// Ensemble-only quantities of one epoch.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleEpoch {
    pub s: f64,
    /// θ after this epoch's update, i.e. the threshold for the next epoch.
    pub theta: f64,
    pub h_intersection: usize,
    pub h_union: usize,
    pub consensus_size: usize,
    /// Test accuracy of the members' predictions that fed this epoch's vote.
    pub member_acc_mean: f64,
    pub member_acc_std: f64,
    /// Fraction of the pseudo-labels offered to the consensus model that are
    /// correct. Labeled nodes are excluded.
    pub pseudo_correctness: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochMetrics {
    /// 1-based.
    pub epoch: usize,
    /// Pre-step training loss of the consensus model.
    pub consensus_loss: f64,
    pub consensus_val_acc: f64,
    pub consensus_test_acc: f64,
    pub ensemble: Option<EnsembleEpoch>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialResult {
    pub seed: u64,
    /// Test accuracy of the consensus model (or the plain GCN), at the final
    /// epoch or at the best validation epoch when that selection is enabled.
    pub test_accuracy: f64,
    pub selected_epoch: usize,
    /// Test accuracy of each member after the last epoch. Empty for a plain GCN.
    pub member_accuracies: Vec<f64>,
    pub epochs: Vec<EpochMetrics>,
}

/// Index sets of a split in a form the trainers consume.
#[derive(Clone, Debug)]
struct Supervision {
    truth: Vec<usize>,
    labeled: Vec<usize>,
    is_labeled: Vec<bool>,
    val: Vec<usize>,
    test: Vec<usize>,
}

impl Supervision {
    fn new(dataset: &Dataset) -> Self {
        let mut is_labeled = vec![false; dataset.num_nodes];
        dataset.split.train.iter().for_each(|&u| is_labeled[u] = true);
        Self {
            truth: dataset.labels.clone(),
            labeled: dataset.split.train.clone(),
            is_labeled,
            val: dataset.split.val.clone(),
            test: dataset.split.test.clone(),
        }
    }
}

fn consensus_model(params: &ModelParams, dataset: &Dataset, seed: u64) -> Result<GcnModel, EnsembleError> {
    let config = params.gcn_config(dataset.feature_dim(), dataset.num_classes);
    let mut init = Rng::substream(seed, CONSENSUS_INDEX, Purpose::WeightInit);
    let dropout = Rng::substream(seed, CONSENSUS_INDEX, Purpose::Dropout);
    Ok(GcnModel::new(config, &mut init, dropout)?)
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// The k members, their views, and the consensus model, advanced one epoch at a time.
pub struct EnsembleState {
    params: EnsembleParams,
    theta: f64,
    s_history: Vec<f64>,
    members: Vec<GcnModel>,
    views: Vec<SparseGraph>,
    subset_rngs: Vec<Rng>,
    consensus: GcnModel,
    graph: SparseGraph,
    x: SparseFeatures,
    sup: Supervision,
    epoch: usize,
    last_sets: Option<(PseudoLabelSets, ConsensusSet)>,
}

impl EnsembleState {
    /// Draws the views and initializes all models from substreams of `seed`.
    pub fn new(
        params: EnsembleParams,
        model: ModelParams,
        dataset: &Dataset,
        x: SparseFeatures,
        seed: u64,
    ) -> Result<Self, EnsembleError> {
        params.check()?;
        let views = make_views(&dataset.edges, dataset.num_nodes, params.k, params.p_drop, seed)?;
        let config = model.gcn_config(dataset.feature_dim(), dataset.num_classes);
        let members = (0..params.k as u64)
            .map(|i| {
                let mut init = Rng::substream(seed, i, Purpose::WeightInit);
                GcnModel::new(config, &mut init, Rng::substream(seed, i, Purpose::Dropout))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let subset_rngs = (0..params.k as u64)
            .map(|i| Rng::substream(seed, i, Purpose::SubsetSampling))
            .collect();
        Ok(Self {
            params,
            theta: params.theta_init,
            s_history: Vec::new(),
            members,
            views,
            subset_rngs,
            consensus: consensus_model(&model, dataset, seed)?,
            graph: build_graph(dataset.num_nodes, &dataset.edges)?.normalize(),
            x,
            sup: Supervision::new(dataset),
            epoch: 0,
            last_sets: None,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn s_history(&self) -> &[f64] {
        &self.s_history
    }

    pub fn members(&self) -> &[GcnModel] {
        &self.members
    }

    pub fn views(&self) -> &[SparseGraph] {
        &self.views
    }

    pub fn consensus_model(&self) -> &GcnModel {
        &self.consensus
    }

    /// The normalized original graph the consensus model trains on.
    pub fn graph(&self) -> &SparseGraph {
        &self.graph
    }

    pub fn features(&self) -> &SparseFeatures {
        &self.x
    }

    /// Pseudo-label sets and consensus set of the most recent epoch.
    pub fn last_sets(&self) -> Option<(&PseudoLabelSets, &ConsensusSet)> {
        self.last_sets.as_ref().map(|(p, c)| (p, c))
    }

    /// Member predictions on their own views, in evaluation mode.
    pub fn member_predictions(&self) -> Result<Vec<Prediction>, EnsembleError> {
        let x = &self.x;
        self.members
            .par_iter()
            .zip(&self.views)
            .map(|(m, g)| Ok(m.predict(g, x)?))
            .collect()
    }

    /// One epoch in the order: predict, high-confidence sets, agreement,
    /// member steps, threshold update, vote, consensus step.
    pub fn run_epoch(&mut self) -> Result<EpochMetrics, EnsembleError> {
        self.epoch += 1;
        let p = self.params;
        let n = self.sup.truth.len();

        let preds = self.member_predictions()?;
        let per_model = preds
            .iter()
            .map(|pred| high_confidence_set(pred, self.theta, &self.sup.is_labeled))
            .collect();
        let sets = PseudoLabelSets::new(per_model, n, p.label_aware_agreement);
        let s = agreement_ratio(&sets);
        self.s_history.push(s);

        let fraction = if p.adaptive_sampling { s } else { 1.0 };
        let training: Vec<TrainingSet> = sets
            .per_model
            .iter()
            .zip(self.subset_rngs.iter_mut())
            .map(|(h, rng)| {
                if p.pseudo_labels {
                    sample_training_set(&self.sup.labeled, &self.sup.truth, h, fraction, rng)
                } else {
                    sample_training_set(&self.sup.labeled, &self.sup.truth, &Default::default(), 0.0, rng)
                }
            })
            .collect();
        let x = &self.x;
        self.members
            .par_iter_mut()
            .zip(&self.views)
            .zip(&training)
            .try_for_each(|((m, g), t)| m.train_step(g, x, &t.labels, &t.nodes).map(drop))?;

        if p.adaptive_threshold && self.s_history.len() >= 2 {
            let prev = self.s_history[self.s_history.len() - 2];
            self.theta = update_threshold(self.theta, p.alpha, prev, s, p.theta_min, p.theta_max);
        }

        let vote = consensus_vote(&preds, p.beta);
        // Pseudo-labels offered to the consensus model; the conservative
        // variant keeps only nodes confident in every member.
        let mut in_intersection = vec![false; n];
        sets.intersection.iter().for_each(|&u| in_intersection[u] = true);
        let offered: Vec<(usize, usize)> = vote
            .nodes
            .iter()
            .zip(&vote.labels)
            .filter(|&(&u, _)| !self.sup.is_labeled[u] && (!p.conservative || in_intersection[u]))
            .map(|(&u, &l)| (u, l))
            .collect();
        let pseudo_correctness = (!offered.is_empty()).then(|| {
            let correct = offered.iter().filter(|&&(u, l)| self.sup.truth[u] == l).count();
            correct as f64 / offered.len() as f64
        });

        let mut labels = vec![0; n];
        let mut nodes = Vec::new();
        if p.pseudo_labels {
            for &(u, l) in &offered {
                nodes.push(u);
                labels[u] = l;
            }
        }
        for &u in &self.sup.labeled {
            nodes.push(u);
            labels[u] = self.sup.truth[u];
        }
        nodes.sort_unstable();
        let consensus_loss = self.consensus.train_step(&self.graph, &self.x, &labels, &nodes)?;
        let cpred = self.consensus.predict(&self.graph, &self.x)?;

        let member_accs: Vec<f64> = preds
            .iter()
            .map(|q| q.accuracy(&self.sup.truth, &self.sup.test))
            .collect();
        let metrics = EpochMetrics {
            epoch: self.epoch,
            consensus_loss,
            consensus_val_acc: cpred.accuracy(&self.sup.truth, &self.sup.val),
            consensus_test_acc: cpred.accuracy(&self.sup.truth, &self.sup.test),
            ensemble: Some(EnsembleEpoch {
                s,
                theta: self.theta,
                h_intersection: sets.intersection.len(),
                h_union: sets.union.len(),
                consensus_size: vote.nodes.len(),
                member_acc_mean: member_accs.iter().sum::<f64>() / member_accs.len() as f64,
                member_acc_std: sample_std(&member_accs),
                pseudo_correctness,
            }),
        };
        self.last_sets = Some((sets, vote));
        Ok(metrics)
    }

    /// Test accuracy of each member on its view.
    pub fn member_test_accuracies(&self) -> Result<Vec<f64>, EnsembleError> {
        Ok(self
            .member_predictions()?
            .iter()
            .map(|p| p.accuracy(&self.sup.truth, &self.sup.test))
            .collect())
    }
}

impl EnsembleParams {
    pub fn check(&self) -> Result<(), EnsembleError> {
        let bad = |m: String| Err(EnsembleError::InvalidParameter(m));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha = {} must be finite and >= 0", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return bad(format!("beta = {} outside (0, 1]", self.beta));
        }
        if !(0.0..=1.0).contains(&self.p_drop) {
            return bad(format!("p_drop = {} outside [0, 1]", self.p_drop));
        }
        if !(0.0 <= self.theta_min && self.theta_min <= self.theta_init && self.theta_init <= self.theta_max)
            || self.theta_max > 1.0
        {
            return bad(format!(
                "need 0 <= theta_min <= theta_init <= theta_max <= 1, got {} / {} / {}",
                self.theta_min, self.theta_init, self.theta_max
            ));
        }
        Ok(())
    }
}

fn select(epochs: &[EpochMetrics], best_val: bool) -> (usize, f64) {
    let last = epochs.last().expect("at least one epoch");
    if !best_val {
        return (last.epoch, last.consensus_test_acc);
    }
    let best = epochs.iter().fold(&epochs[0], |best, e| {
        if e.consensus_val_acc > best.consensus_val_acc {
            e
        } else {
            best
        }
    });
    (best.epoch, best.consensus_test_acc)
}

/// Trains an ensemble for `max_epochs` and reports the consensus model.
pub fn run_trial(
    params: EnsembleParams,
    model: ModelParams,
    dataset: &Dataset,
    x: SparseFeatures,
    max_epochs: usize,
    select_best_val: bool,
    seed: u64,
) -> Result<TrialResult, EnsembleError> {
    if max_epochs == 0 {
        return Err(EnsembleError::InvalidParameter("max_epochs must be at least 1".into()));
    }
    let mut state = EnsembleState::new(params, model, dataset, x, seed)?;
    let epochs = (0..max_epochs)
        .map(|_| state.run_epoch())
        .collect::<Result<Vec<_>, _>>()?;
    let (selected_epoch, test_accuracy) = select(&epochs, select_best_val);
    Ok(TrialResult {
        seed,
        test_accuracy,
        selected_epoch,
        member_accuracies: state.member_test_accuracies()?,
        epochs,
    })
}

/// A single GCN on the original graph trained on the labeled nodes only. It
/// draws from the same streams as the consensus model of [`run_trial`].
pub fn train_plain_gcn(
    model: ModelParams,
    dataset: &Dataset,
    x: SparseFeatures,
    max_epochs: usize,
    select_best_val: bool,
    seed: u64,
) -> Result<(TrialResult, GcnModel), EnsembleError> {
    if max_epochs == 0 {
        return Err(EnsembleError::InvalidParameter("max_epochs must be at least 1".into()));
    }
    let sup = Supervision::new(dataset);
    let graph = build_graph(dataset.num_nodes, &dataset.edges)?.normalize();
    let mut gcn = consensus_model(&model, dataset, seed)?;
    let mut epochs = Vec::with_capacity(max_epochs);
    for epoch in 1..=max_epochs {
        let loss = gcn.train_step(&graph, &x, &sup.truth, &sup.labeled)?;
        let pred = gcn.predict(&graph, &x)?;
        epochs.push(EpochMetrics {
            epoch,
            consensus_loss: loss,
            consensus_val_acc: accuracy(&pred.labels, &sup.truth, &sup.val),
            consensus_test_acc: accuracy(&pred.labels, &sup.truth, &sup.test),
            ensemble: None,
        });
    }
    let (selected_epoch, test_accuracy) = select(&epochs, select_best_val);
    let result = TrialResult {
        seed,
        test_accuracy,
        selected_epoch,
        member_accuracies: Vec::new(),
        epochs,
    };
    Ok((result, gcn))
}
