//! Runs configured experiments and writes their metric files.
//!
//! A plain run writes `trials/trial-NNN.csv` (one row per epoch) and
//! `summary.json`. A sweep writes `point-PPP/trial-NNN.csv` per grid point
//! and one `summary.json` with a row per point. Files depend only on the
//! config, so re-running reproduces them byte for byte.
//!
//! Trial `t` uses the seed `trial_seed(master_seed, t)`. Generated graphs,
//! label-rate splits and noisy edges are all redrawn from that seed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, DatasetSource, ExperimentConfig, SweepPoint, TrialPlan};
use crate::data::{
    export_embeddings, generate_sbm, inject_noisy_edges, load_bundle, make_label_rate_split, DataError, Dataset,
};
use crate::ensemble::{run_trial, train_plain_gcn, EnsembleError, EnsembleState, EpochMetrics, TrialResult};
use crate::rng::trial_seed;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Unsupported(String),
    #[error("cannot build a {jobs}-thread pool: {message}")]
    ThreadPool { jobs: usize, message: String },
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// The shared, unperturbed dataset of a config: the loaded bundle, or
/// nothing for generated graphs (those are drawn per trial).
pub fn base_dataset(config: &ExperimentConfig) -> Result<Option<Dataset>, ExperimentError> {
    match &config.dataset {
        DatasetSource::Bundle(dir) => Ok(Some(load_bundle(dir)?)),
        DatasetSource::Sbm(_) => Ok(None),
    }
}

/// The dataset one trial trains on, after the configured perturbations.
pub fn trial_dataset(config: &ExperimentConfig, base: Option<&Dataset>, seed: u64) -> Result<Dataset, ExperimentError> {
    let mut d = match (&config.dataset, base) {
        (DatasetSource::Sbm(spec), _) => generate_sbm(spec, seed)?,
        (DatasetSource::Bundle(_), Some(d)) => d.clone(),
        (DatasetSource::Bundle(dir), None) => load_bundle(dir)?,
    };
    if let Some(per_class) = config.per_class {
        d = make_label_rate_split(&d, per_class, seed)?;
    }
    if let Some(q) = config.noise_q {
        d = inject_noisy_edges(&d, q, seed)?;
    }
    Ok(d)
}

/// Runs trial `t` of `config`.
pub fn run_one_trial(
    config: &ExperimentConfig,
    base: Option<&Dataset>,
    t: usize,
) -> Result<TrialResult, ExperimentError> {
    let seed = trial_seed(config.master_seed, t as u64);
    let d = trial_dataset(config, base, seed)?;
    let x = d.sparse_features(config.row_normalize);
    Ok(match config.plan() {
        TrialPlan::Plain => {
            train_plain_gcn(
                config.model_params(),
                &d,
                x,
                config.max_epochs,
                config.select_best_val,
                seed,
            )?
            .0
        }
        TrialPlan::Ensemble(p) => run_trial(
            p,
            config.model_params(),
            &d,
            x,
            config.max_epochs,
            config.select_best_val,
            seed,
        )?,
    })
}

/// All trials of a config (sweep ignored), on a pool of `config.jobs` threads.
pub fn run_trials(config: &ExperimentConfig, base: Option<&Dataset>) -> Result<Vec<TrialResult>, ExperimentError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| ExperimentError::ThreadPool {
            jobs: config.jobs,
            message: e.to_string(),
        })?;
    pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_one_trial(config, base, t))
            .collect()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub seed: u64,
    pub test_accuracy: f64,
    pub selected_epoch: usize,
    pub member_accuracies: Vec<f64>,
    pub final_pseudo_correctness: Option<f64>,
}

/// Per-epoch means over trials. Ensemble columns are absent for a plain GCN;
/// `pseudo_correctness` averages only the trials where it is defined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMean {
    pub epoch: usize,
    pub consensus_loss: f64,
    pub consensus_val_acc: f64,
    pub consensus_test_acc: f64,
    pub s: Option<f64>,
    pub theta: Option<f64>,
    pub h_intersection: Option<f64>,
    pub h_union: Option<f64>,
    pub consensus_size: Option<f64>,
    pub member_acc_mean: Option<f64>,
    pub member_acc_std: Option<f64>,
    pub pseudo_correctness: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialSummary>,
    pub mean: f64,
    /// Sample standard deviation (n − 1); null for a single trial.
    pub std: Option<f64>,
    /// Largest per-member mean test accuracy, taken over member indices.
    pub best_member_mean: Option<f64>,
    pub epochs: Vec<EpochMean>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub std: Option<f64>,
    pub best_member_mean: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub config: ExperimentConfig,
    pub points: Vec<SweepRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Summary {
    Sweep(SweepSummary),
    Run(RunSummary),
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; `None` below two values.
pub fn sample_std(xs: &[f64]) -> Option<f64> {
    (xs.len() >= 2).then(|| {
        let m = mean(xs);
        (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
    })
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| mean(&v))
}

/// Per-member means over trials, maximized over members.
pub fn best_member_mean(results: &[TrialResult]) -> Option<f64> {
    let k = results.first()?.member_accuracies.len();
    (0..k)
        .map(|i| mean(&results.iter().map(|r| r.member_accuracies[i]).collect::<Vec<_>>()))
        .reduce(f64::max)
}

fn epoch_means(results: &[TrialResult]) -> Vec<EpochMean> {
    let epochs = results.first().map_or(0, |r| r.epochs.len());
    (0..epochs)
        .map(|j| {
            let rows: Vec<&EpochMetrics> = results.iter().map(|r| &r.epochs[j]).collect();
            let ens = |f: fn(&crate::ensemble::EnsembleEpoch) -> Option<f64>| {
                mean_of(rows.iter().map(|m| m.ensemble.as_ref().and_then(f)))
            };
            EpochMean {
                epoch: rows[0].epoch,
                consensus_loss: mean(&rows.iter().map(|m| m.consensus_loss).collect::<Vec<_>>()),
                consensus_val_acc: mean(&rows.iter().map(|m| m.consensus_val_acc).collect::<Vec<_>>()),
                consensus_test_acc: mean(&rows.iter().map(|m| m.consensus_test_acc).collect::<Vec<_>>()),
                s: ens(|e| Some(e.s)),
                theta: ens(|e| Some(e.theta)),
                h_intersection: ens(|e| Some(e.h_intersection as f64)),
                h_union: ens(|e| Some(e.h_union as f64)),
                consensus_size: ens(|e| Some(e.consensus_size as f64)),
                member_acc_mean: ens(|e| Some(e.member_acc_mean)),
                member_acc_std: ens(|e| Some(e.member_acc_std)),
                pseudo_correctness: ens(|e| e.pseudo_correctness),
            }
        })
        .collect()
}

pub fn summarize(config: &ExperimentConfig, results: &[TrialResult]) -> RunSummary {
    let accs: Vec<f64> = results.iter().map(|r| r.test_accuracy).collect();
    RunSummary {
        config: config.clone(),
        trials: results
            .iter()
            .enumerate()
            .map(|(t, r)| TrialSummary {
                trial: t,
                seed: r.seed,
                test_accuracy: r.test_accuracy,
                selected_epoch: r.selected_epoch,
                member_accuracies: r.member_accuracies.clone(),
                final_pseudo_correctness: r
                    .epochs
                    .last()
                    .and_then(|e| e.ensemble.as_ref())
                    .and_then(|e| e.pseudo_correctness),
            })
            .collect(),
        mean: mean(&accs),
        std: sample_std(&accs),
        best_member_mean: best_member_mean(results),
        epochs: epoch_means(results),
    }
}

const CSV_HEADER: &str = "epoch,consensus_loss,consensus_val_acc,consensus_test_acc,s,theta,h_intersection,\
h_union,consensus_size,member_acc_mean,member_acc_std,pseudo_correctness";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Per-epoch metrics as CSV; ensemble columns are empty for a plain GCN.
pub fn write_trial_csv(path: &Path, result: &TrialResult) -> Result<(), ExperimentError> {
    let mut out = String::with_capacity(128 * (result.epochs.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for m in &result.epochs {
        let e = m.ensemble.as_ref();
        let fields = [
            m.epoch.to_string(),
            m.consensus_loss.to_string(),
            m.consensus_val_acc.to_string(),
            m.consensus_test_acc.to_string(),
            opt(e.map(|e| e.s)),
            opt(e.map(|e| e.theta)),
            opt(e.map(|e| e.h_intersection)),
            opt(e.map(|e| e.h_union)),
            opt(e.map(|e| e.consensus_size)),
            opt(e.map(|e| e.member_acc_mean)),
            opt(e.map(|e| e.member_acc_std)),
            opt(e.and_then(|e| e.pseudo_correctness)),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(io_error(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let mut text = serde_json::to_string_pretty(value).expect("summaries serialize");
    text.push('\n');
    let mut f = fs::File::create(path).map_err(io_error(path))?;
    f.write_all(text.as_bytes()).map_err(io_error(path))
}

fn write_trials(dir: &Path, results: &[TrialResult]) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    for (t, r) in results.iter().enumerate() {
        write_trial_csv(&dir.join(format!("trial-{t:03}.csv")), r)?;
    }
    Ok(())
}

/// Runs a config without a sweep and writes its files under `out`.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<RunSummary, ExperimentError> {
    if config.sweep.is_some() {
        return Err(ExperimentError::Unsupported(
            "config has a sweep; run it as a sweep".into(),
        ));
    }
    config.validate()?;
    let base = base_dataset(config)?;
    let results = run_trials(config, base.as_ref())?;
    write_trials(&out.join("trials"), &results)?;
    let summary = summarize(config, &results);
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Runs every grid point of a sweep and writes its files under `out`.
pub fn run_sweep(config: &ExperimentConfig, out: &Path) -> Result<SweepSummary, ExperimentError> {
    let Some(grid) = &config.sweep else {
        return Err(ExperimentError::Unsupported("config has no sweep grid".into()));
    };
    config.validate()?;
    let base = base_dataset(config)?;
    let mut points = Vec::new();
    for (p, point) in grid.points().into_iter().enumerate() {
        let at = config.at_point(&point);
        let results = run_trials(&at, base.as_ref())?;
        write_trials(&out.join(format!("point-{p:03}")), &results)?;
        let accuracies: Vec<f64> = results.iter().map(|r| r.test_accuracy).collect();
        points.push(SweepRow {
            point,
            mean: mean(&accuracies),
            std: sample_std(&accuracies),
            best_member_mean: best_member_mean(&results),
            accuracies,
        });
    }
    let summary = SweepSummary {
        config: config.clone(),
        points,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

pub fn read_summary(path: &Path) -> Result<Summary, ExperimentError> {
    let file = if path.is_dir() {
        path.join("summary.json")
    } else {
        path.to_path_buf()
    };
    let text = fs::read_to_string(&file).map_err(io_error(&file))?;
    serde_json::from_str(&text).map_err(|e| ExperimentError::Config(ConfigError::Json(e)))
}

/// Trains trial 0 of an ensemble config for `epoch` epochs and writes the
/// consensus model's hidden embeddings. `high_confidence` marks nodes in
/// every member's high-confidence set at that epoch; `agreed` marks the
/// consensus set. Labels are ground truth.
pub fn export_trial_embeddings(config: &ExperimentConfig, epoch: usize, path: &Path) -> Result<(), ExperimentError> {
    config.validate()?;
    let TrialPlan::Ensemble(params) = config.plan() else {
        return Err(ExperimentError::Unsupported(format!(
            "variant {} has no ensemble state to export",
            config.variant
        )));
    };
    if epoch == 0 || epoch > config.max_epochs {
        return Err(ExperimentError::Unsupported(format!(
            "epoch {epoch} outside 1..={}",
            config.max_epochs
        )));
    }
    let base = base_dataset(config)?;
    let seed = trial_seed(config.master_seed, 0);
    let d = trial_dataset(config, base.as_ref(), seed)?;
    let x = d.sparse_features(config.row_normalize);
    let mut state = EnsembleState::new(params, config.model_params(), &d, x, seed)?;
    for _ in 0..epoch {
        state.run_epoch()?;
    }
    let (sets, vote) = state.last_sets().expect("at least one epoch ran");
    let mut high = vec![false; d.num_nodes];
    sets.intersection.iter().for_each(|&u| high[u] = true);
    let mut agreed = vec![false; d.num_nodes];
    vote.nodes.iter().for_each(|&u| agreed[u] = true);
    let h = state
        .consensus_model()
        .hidden_embeddings(state.graph(), state.features())
        .map_err(EnsembleError::from)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_error(parent))?;
    }
    Ok(export_embeddings(path, &h, &d.labels, &high, &agreed)?)
}
