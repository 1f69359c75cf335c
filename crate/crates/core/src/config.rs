//! Experiment configuration: one JSON document per experiment.
//!
//! ```json
//! {
//!   "dataset": {"bundle": "data/cora"},
//!   "variant": "ablation-fixed-theta(0.99)",
//!   "trials": 10,
//!   "master_seed": 7,
//!   "sweep": {"k": [1, 3, 5], "alpha": [0.0, 0.1]}
//! }
//! ```
//!
//! Every field except `dataset` has a default. `dataset` is either
//! `{"bundle": <dir>}` or `{"sbm": <generator spec>}`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::SbmSpec;
use crate::ensemble::{EnsembleParams, ModelParams};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
    #[error("unknown variant {0:?}")]
    UnknownVariant(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetSource {
    Bundle(PathBuf),
    Sbm(SbmSpec),
}

/// Which training procedure a config runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Variant {
    /// One GCN on the original graph, labeled nodes only.
    BaselineGcn,
    A3,
    /// Consensus model trains only on agreed nodes that are high-confidence in every member.
    Conservative,
    /// Fixed threshold, members train on their whole pseudo-set.
    FixedTheta(f64),
    /// Adaptive threshold, members train on their whole pseudo-set.
    AdaptiveThetaOnly,
    /// Fixed threshold, agreement-sized pseudo-label samples.
    AdaptiveSamplingOnly(f64),
    /// `k = 1`, no threshold adaptation, no pseudo-labels.
    NoEnsemble,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::BaselineGcn => write!(f, "baseline-gcn"),
            Variant::A3 => write!(f, "a3"),
            Variant::Conservative => write!(f, "conservative"),
            Variant::FixedTheta(t) => write!(f, "ablation-fixed-theta({t})"),
            Variant::AdaptiveThetaOnly => write!(f, "ablation-adaptive-theta-only"),
            Variant::AdaptiveSamplingOnly(t) => write!(f, "ablation-adaptive-sampling-only({t})"),
            Variant::NoEnsemble => write!(f, "no-ensemble"),
        }
    }
}

impl FromStr for Variant {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || ConfigError::UnknownVariant(s.to_string());
        let theta_arg = |prefix: &str| -> Option<Result<f64, ConfigError>> {
            let inner = s.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
            Some(inner.trim().parse::<f64>().map_err(|_| unknown()))
        };
        Ok(match s {
            "baseline-gcn" => Variant::BaselineGcn,
            "a3" => Variant::A3,
            "conservative" => Variant::Conservative,
            "ablation-adaptive-theta-only" => Variant::AdaptiveThetaOnly,
            "no-ensemble" => Variant::NoEnsemble,
            _ => {
                if let Some(t) = theta_arg("ablation-fixed-theta") {
                    Variant::FixedTheta(t?)
                } else if let Some(t) = theta_arg("ablation-adaptive-sampling-only") {
                    Variant::AdaptiveSamplingOnly(t?)
                } else {
                    return Err(unknown());
                }
            }
        })
    }
}

impl TryFrom<String> for Variant {
    type Error = ConfigError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Variant> for String {
    fn from(v: Variant) -> String {
        v.to_string()
    }
}

/// Grid axes; each present axis overrides the matching config field.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(default)]
    pub k: Option<Vec<usize>>,
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
    #[serde(default)]
    pub p_drop: Option<Vec<f64>>,
    #[serde(default)]
    pub per_class: Option<Vec<usize>>,
    #[serde(default)]
    pub q: Option<Vec<f64>>,
}

/// One grid point; `None` leaves the base config's value in place.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub p_drop: Option<f64>,
    pub per_class: Option<usize>,
    pub q: Option<f64>,
}

fn axis<T: Copy>(values: &Option<Vec<T>>) -> Vec<Option<T>> {
    match values {
        Some(v) => v.iter().copied().map(Some).collect(),
        None => vec![None],
    }
}

impl SweepGrid {
    /// Cartesian product in the order k, alpha, p_drop, per_class, q (q varies fastest).
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for k in axis(&self.k) {
            for alpha in axis(&self.alpha) {
                for p_drop in axis(&self.p_drop) {
                    for per_class in axis(&self.per_class) {
                        for q in axis(&self.q) {
                            out.push(SweepPoint {
                                k,
                                alpha,
                                p_drop,
                                per_class,
                                q,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    fn is_empty(&self) -> bool {
        [self.k.as_ref().map(Vec::len), self.per_class.as_ref().map(Vec::len)]
            .into_iter()
            .chain([&self.alpha, &self.p_drop, &self.q].map(|a| a.as_ref().map(Vec::len)))
            .all(|len| len.is_none_or(|l| l == 0))
    }
}

macro_rules! defaults {
    ($($name:ident: $ty:ty = $value:expr;)*) => {
        $(fn $name() -> $ty { $value })*
    };
}

defaults! {
    default_variant: Variant = Variant::A3;
    default_k: usize = 10;
    default_alpha: f64 = 0.1;
    default_beta: f64 = 1.0;
    default_p_drop: f64 = 0.2;
    default_theta_init: f64 = 0.95;
    default_theta_min: f64 = 0.5;
    default_theta_max: f64 = 0.99;
    default_max_epochs: usize = 200;
    default_hidden_dim: usize = 16;
    default_dropout: f64 = 0.5;
    default_true: bool = true;
    default_lr: f64 = 0.01;
    default_weight_decay: f64 = 5e-4;
    default_trials: usize = 10;
    default_jobs: usize = 1;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_p_drop")]
    pub p_drop: f64,
    #[serde(default = "default_theta_init")]
    pub theta_init: f64,
    #[serde(default = "default_theta_min")]
    pub theta_min: f64,
    #[serde(default = "default_theta_max")]
    pub theta_max: f64,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_hidden_dim")]
    pub hidden_dim: usize,
    #[serde(default = "default_dropout")]
    pub dropout: f64,
    #[serde(default = "default_true")]
    pub input_dropout: bool,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
    /// L1 row normalization of the features. Off by default: raw binary
    /// bag-of-words rows give the members sharper early predictions.
    #[serde(default)]
    pub row_normalize: bool,
    #[serde(default)]
    pub label_aware_agreement: bool,
    #[serde(default)]
    pub select_best_val: bool,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Replace the training set with this many random nodes per class.
    #[serde(default)]
    pub per_class: Option<usize>,
    /// Replace inter-class edges with `⌊q·|E_clean|⌋` random ones.
    #[serde(default)]
    pub noise_q: Option<f64>,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default)]
    pub sweep: Option<SweepGrid>,
}

/// What a single trial runs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrialPlan {
    Plain,
    Ensemble(EnsembleParams),
}

impl ExperimentConfig {
    /// A config with every default and the given dataset.
    pub fn new(dataset: DatasetSource) -> Self {
        serde_json::from_value(serde_json::json!({ "dataset": dataset })).expect("defaults deserialize")
    }

    /// Reads a config file; a relative bundle path is taken relative to the file.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: Self = serde_json::from_str(&text)?;
        if let DatasetSource::Bundle(dir) = &mut config.dataset {
            if dir.is_relative() {
                if let Some(parent) = path.parent() {
                    *dir = parent.join(&*dir);
                }
            }
        }
        Ok(config)
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            hidden_dim: self.hidden_dim,
            dropout: self.dropout,
            input_dropout: self.input_dropout,
            lr: self.lr,
            weight_decay: self.weight_decay,
        }
    }

    /// Resolves the variant into concrete trial settings.
    pub fn plan(&self) -> TrialPlan {
        let base = EnsembleParams {
            k: self.k,
            alpha: self.alpha,
            beta: self.beta,
            p_drop: self.p_drop,
            theta_init: self.theta_init,
            theta_min: self.theta_min,
            theta_max: self.theta_max,
            adaptive_threshold: true,
            adaptive_sampling: true,
            pseudo_labels: true,
            conservative: false,
            label_aware_agreement: self.label_aware_agreement,
        };
        let fixed = |theta: f64, adaptive_sampling: bool| EnsembleParams {
            theta_init: theta,
            theta_min: theta,
            theta_max: theta,
            adaptive_threshold: false,
            adaptive_sampling,
            ..base
        };
        TrialPlan::Ensemble(match self.variant {
            Variant::BaselineGcn => return TrialPlan::Plain,
            Variant::A3 => base,
            Variant::Conservative => EnsembleParams {
                conservative: true,
                ..base
            },
            Variant::FixedTheta(t) => fixed(t, false),
            Variant::AdaptiveThetaOnly => EnsembleParams {
                adaptive_sampling: false,
                ..base
            },
            Variant::AdaptiveSamplingOnly(t) => fixed(t, true),
            Variant::NoEnsemble => EnsembleParams {
                k: 1,
                alpha: 0.0,
                adaptive_threshold: false,
                adaptive_sampling: false,
                pseudo_labels: false,
                ..base
            },
        })
    }

    /// The config with a grid point's overrides applied and the sweep removed.
    pub fn at_point(&self, point: &SweepPoint) -> Self {
        let mut c = self.clone();
        c.sweep = None;
        if let Some(k) = point.k {
            c.k = k;
        }
        if let Some(a) = point.alpha {
            c.alpha = a;
        }
        if let Some(p) = point.p_drop {
            c.p_drop = p;
        }
        if point.per_class.is_some() {
            c.per_class = point.per_class;
        }
        if point.q.is_some() {
            c.noise_q = point.q;
        }
        c
    }

    /// Checks every field, and every grid point of a sweep.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field: &'static str, message: String| Err(ConfigError::Invalid { field, message });
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if self.k == 0 {
            return bad("k", "must be at least 1".into());
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha", format!("{} must be finite and >= 0", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return bad("beta", format!("{} outside (0, 1]", self.beta));
        }
        if !unit(self.p_drop) {
            return bad("p_drop", format!("{} outside [0, 1]", self.p_drop));
        }
        if !(unit(self.theta_min) && unit(self.theta_max) && self.theta_min <= self.theta_max) {
            return bad(
                "theta_min",
                format!(
                    "need 0 <= theta_min <= theta_max <= 1, got {} and {}",
                    self.theta_min, self.theta_max
                ),
            );
        }
        if !(self.theta_min..=self.theta_max).contains(&self.theta_init) {
            return bad(
                "theta_init",
                format!("{} outside [{}, {}]", self.theta_init, self.theta_min, self.theta_max),
            );
        }
        if let Variant::FixedTheta(t) | Variant::AdaptiveSamplingOnly(t) = self.variant {
            if !unit(t) {
                return bad("variant", format!("threshold {t} outside [0, 1]"));
            }
        }
        if self.max_epochs == 0 {
            return bad("max_epochs", "must be at least 1".into());
        }
        if self.hidden_dim == 0 {
            return bad("hidden_dim", "must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout", format!("{} outside [0, 1)", self.dropout));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr", format!("{} must be positive", self.lr));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight_decay", format!("{} must be >= 0", self.weight_decay));
        }
        if self.trials == 0 {
            return bad("trials", "must be at least 1".into());
        }
        if self.jobs == 0 {
            return bad("jobs", "must be at least 1".into());
        }
        if self.per_class == Some(0) {
            return bad("per_class", "must be at least 1".into());
        }
        if let Some(q) = self.noise_q {
            if !(q >= 0.0 && q.is_finite()) {
                return bad("noise_q", format!("{q} must be finite and >= 0"));
            }
        }
        if let Some(grid) = &self.sweep {
            if grid.is_empty() {
                return bad("sweep", "has no non-empty axis".into());
            }
            for point in grid.points() {
                self.at_point(&point).validate()?;
            }
        }
        Ok(())
    }
}
