//! Random-search hyper-parameter optimization.
//!
//! A search space lists candidate values per hyper-parameter:
//!
//! ```json
//! {
//!   "model_name": ["transe", "distmult"],
//!   "embedding_dim": [16, 32],
//!   "model_specific": {"p_norm": [1, 2]},
//!   "learning_rate": [0.01, 0.1],
//!   "margin": [1.0],
//!   "num_epochs": [50],
//!   "batch_size": [8, 32],
//!   "trials": 10,
//!   "selection_metric": {"kind": "hits_at_k", "k": 10}
//! }
//! ```
//!
//! `loss` is optional (absent: each model's default loss). `model_specific`
//! keys are only drawn for models they apply to. `seed`, `split_ratio`,
//! `eval_ks`, `filter_setting`, `device` and `metadata` are plain values
//! copied into every sampled configuration. The selection metric defaults
//! to filtered hits@10; its k is always added to `eval_ks`.
//!
//! The training graph is split once more (ratio 0.9, coverage repaired) into
//! sub-train and validation; every trial trains on sub-train and is scored on
//! validation with train ∪ validation as the filter set.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Device, ExperimentConfig, ExperimentMetadata, FilterSetting, LossKind};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, known_set, RankMetrics};
use crate::kg::{split, IndexedKG, TripleIds};
use crate::models::ModelName;
use crate::rng::{self, split_seed, ChaCha8Rng, Stream};
use crate::training::train;

pub const VALIDATION_SPLIT_RATIO: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectionMetric {
    HitsAtK { k: usize },
    MeanRankFiltered,
}

impl Default for SelectionMetric {
    fn default() -> Self {
        SelectionMetric::HitsAtK { k: 10 }
    }
}

impl SelectionMetric {
    /// Filtered value of the metric.
    pub fn value(self, m: &RankMetrics) -> Option<f64> {
        match self {
            SelectionMetric::HitsAtK { k } => m.hits_at(k, true),
            SelectionMetric::MeanRankFiltered => Some(m.mean_rank_filtered),
        }
    }

    pub fn higher_is_better(self) -> bool {
        matches!(self, SelectionMetric::HitsAtK { .. })
    }

    fn improves(self, candidate: f64, incumbent: f64) -> bool {
        if self.higher_is_better() {
            candidate > incumbent
        } else {
            candidate < incumbent
        }
    }
}

impl fmt::Display for SelectionMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionMetric::HitsAtK { k } => write!(f, "hits@{k}"),
            SelectionMetric::MeanRankFiltered => f.write_str("mean_rank_filtered"),
        }
    }
}

impl FromStr for SelectionMetric {
    type Err = Error;
    /// Accepts `hits@K` and `mean_rank_filtered` (or `mr`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if let Some(k) = s.strip_prefix("hits@") {
            return match k.parse() {
                Ok(k) if k > 0 => Ok(SelectionMetric::HitsAtK { k }),
                _ => Err(Error::Config(format!("invalid k in {s:?}"))),
            };
        }
        match s.as_str() {
            "mean_rank_filtered" | "mr" | "mean_rank" => Ok(SelectionMetric::MeanRankFiltered),
            _ => Err(Error::Config(format!(
                "unknown selection metric {s:?} (expected hits@K or mean_rank_filtered)"
            ))),
        }
    }
}

fn default_split_ratio() -> f64 {
    0.8
}

fn default_eval_ks() -> Vec<usize> {
    vec![1, 3, 10]
}

fn default_filter() -> FilterSetting {
    FilterSetting::Both
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    pub model_name: Vec<ModelName>,
    pub embedding_dim: Vec<usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub model_specific: BTreeMap<String, Vec<usize>>,
    pub learning_rate: Vec<f64>,
    pub margin: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<Vec<LossKind>>,
    pub num_epochs: Vec<usize>,
    pub batch_size: Vec<usize>,
    pub trials: usize,
    #[serde(default)]
    pub selection_metric: SelectionMetric,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_split_ratio")]
    pub split_ratio: f64,
    #[serde(default = "default_eval_ks")]
    pub eval_ks: Vec<usize>,
    #[serde(default = "default_filter")]
    pub filter_setting: FilterSetting,
    #[serde(default)]
    pub device: Device,
    #[serde(default)]
    pub metadata: ExperimentMetadata,
}

impl SearchSpace {
    /// The space containing exactly `config`.
    pub fn singleton(config: &ExperimentConfig, trials: usize) -> Self {
        SearchSpace {
            model_name: vec![config.model_name],
            embedding_dim: vec![config.embedding_dim],
            model_specific: config
                .model_specific
                .iter()
                .map(|(k, &v)| (k.clone(), vec![v]))
                .collect(),
            learning_rate: vec![config.learning_rate],
            margin: vec![config.margin],
            loss: Some(vec![config.loss]),
            num_epochs: vec![config.num_epochs],
            batch_size: vec![config.batch_size],
            trials,
            selection_metric: SelectionMetric::default(),
            seed: config.seed,
            split_ratio: config.split_ratio,
            eval_ks: config.eval_ks.clone(),
            filter_setting: config.filter_setting,
            device: config.device,
            metadata: config.metadata.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let space: SearchSpace = serde_json::from_str(text)?;
        space.validate()?;
        Ok(space)
    }

    fn base(&self, model: ModelName) -> ExperimentConfig {
        let mut ks = self.eval_ks.clone();
        if let SelectionMetric::HitsAtK { k } = self.selection_metric {
            ks.push(k);
        }
        ks.sort_unstable();
        ks.dedup();
        let mut c = ExperimentConfig::new(model);
        c.seed = self.seed;
        c.split_ratio = self.split_ratio;
        c.eval_ks = ks;
        c.filter_setting = self.filter_setting;
        c.device = self.device;
        c.metadata = self.metadata.clone();
        c
    }

    /// Checks that every candidate set is non-empty and that every value
    /// combination yields a valid [`ExperimentConfig`]. Each field is checked
    /// independently, which suffices because validity is per field.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        macro_rules! nonempty {
            ($($field:ident),*) => {$(
                if self.$field.is_empty() {
                    return bad(format!("{} has no candidate values", stringify!($field)));
                }
            )*};
        }
        nonempty!(model_name, embedding_dim, learning_rate, margin, num_epochs, batch_size);
        if let Some(l) = &self.loss {
            if l.is_empty() {
                return bad("loss has no candidate values".into());
            }
        }
        let check = |f: &dyn Fn(&mut ExperimentConfig)| {
            let mut c = self.base(self.model_name[0]);
            f(&mut c);
            c.validate()
        };
        check(&|_| {})?;
        for &m in &self.model_name {
            check(&|c| {
                c.model_name = m;
                c.loss = m.default_loss();
            })?;
        }
        for &v in &self.embedding_dim {
            check(&|c| c.embedding_dim = v)?;
        }
        for &v in &self.learning_rate {
            check(&|c| c.learning_rate = v)?;
        }
        for &v in &self.margin {
            check(&|c| c.margin = v)?;
        }
        for &v in &self.num_epochs {
            check(&|c| c.num_epochs = v)?;
        }
        for &v in &self.batch_size {
            check(&|c| c.batch_size = v)?;
        }
        for (key, values) in &self.model_specific {
            let Some(&m) = self
                .model_name
                .iter()
                .find(|m| m.model_specific_keys().contains(&key.as_str()))
            else {
                return bad(format!("model_specific key {key:?} applies to none of the models"));
            };
            if values.is_empty() {
                return bad(format!("model_specific.{key} has no candidate values"));
            }
            for &v in values {
                check(&|c| {
                    c.model_name = m;
                    c.model_specific.insert(key.clone(), v);
                })?;
            }
        }
        Ok(())
    }

    /// Draws every hyper-parameter independently and uniformly. The seed of
    /// the result is the space seed; [`random_search`] replaces it per trial.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ExperimentConfig {
        fn pick<T: Copy, R: Rng + ?Sized>(v: &[T], rng: &mut R) -> T {
            *v.choose(rng).expect("validated non-empty")
        }
        let model = pick(&self.model_name, rng);
        let mut c = self.base(model);
        c.embedding_dim = pick(&self.embedding_dim, rng);
        for (key, values) in &self.model_specific {
            if model.model_specific_keys().contains(&key.as_str()) {
                c.model_specific.insert(key.clone(), pick(values, rng));
            }
        }
        c.learning_rate = pick(&self.learning_rate, rng);
        c.margin = pick(&self.margin, rng);
        c.loss = match &self.loss {
            Some(l) => pick(l, rng),
            None => model.default_loss(),
        };
        c.num_epochs = pick(&self.num_epochs, rng);
        c.batch_size = pick(&self.batch_size, rng);
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrialOutcome {
    Completed { metrics: RankMetrics },
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TrialWire", try_from = "TrialWire")]
pub struct TrialRecord {
    pub trial_index: usize,
    pub config: ExperimentConfig,
    pub outcome: TrialOutcome,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum TrialStatus {
    Completed,
    Failed,
}

// Flat on-disk shape. `#[serde(flatten)]` would buffer the metrics and lose
// the integer keys of the hits maps on the way back in.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrialWire {
    trial_index: usize,
    config: ExperimentConfig,
    status: TrialStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metrics: Option<RankMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
}

impl From<TrialRecord> for TrialWire {
    fn from(r: TrialRecord) -> Self {
        let (status, metrics, reason) = match r.outcome {
            TrialOutcome::Completed { metrics } => (TrialStatus::Completed, Some(metrics), None),
            TrialOutcome::Failed { reason } => (TrialStatus::Failed, None, Some(reason)),
        };
        TrialWire {
            trial_index: r.trial_index,
            config: r.config,
            status,
            metrics,
            reason,
        }
    }
}

impl TryFrom<TrialWire> for TrialRecord {
    type Error = String;
    fn try_from(w: TrialWire) -> std::result::Result<Self, String> {
        let outcome = match (w.status, w.metrics, w.reason) {
            (TrialStatus::Completed, Some(metrics), None) => TrialOutcome::Completed { metrics },
            (TrialStatus::Failed, None, Some(reason)) => TrialOutcome::Failed { reason },
            (TrialStatus::Completed, ..) => return Err("completed trial needs metrics and no reason".into()),
            (TrialStatus::Failed, ..) => return Err("failed trial needs a reason and no metrics".into()),
        };
        Ok(TrialRecord {
            trial_index: w.trial_index,
            config: w.config,
            outcome,
        })
    }
}

impl TrialRecord {
    pub fn metrics(&self) -> Option<&RankMetrics> {
        match &self.outcome {
            TrialOutcome::Completed { metrics } => Some(metrics),
            TrialOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub selection_metric: SelectionMetric,
    /// Index into `trials` of the selected trial.
    pub best_index: usize,
    /// All trials in `trial_index` order.
    pub trials: Vec<TrialRecord>,
    pub sub_train: Vec<TripleIds>,
    pub validation: Vec<TripleIds>,
}

impl SearchOutcome {
    pub fn best(&self) -> &TrialRecord {
        &self.trials[self.best_index]
    }

    pub fn best_value(&self) -> f64 {
        self.best()
            .metrics()
            .and_then(|m| self.selection_metric.value(m))
            .expect("best trial completed")
    }
}

/// Splits the training graph into sub-train and validation.
pub fn validation_split(kg_train: &IndexedKG, seed: u64) -> Result<(IndexedKG, IndexedKG)> {
    split(kg_train, VALIDATION_SPLIT_RATIO, seed)
}

/// Trains one configuration on `sub_train` and scores it on `validation`.
/// Any training or evaluation error becomes a failed record.
pub fn run_trial(
    trial_index: usize,
    config: ExperimentConfig,
    sub_train: &IndexedKG,
    validation: &IndexedKG,
) -> TrialRecord {
    let outcome = train::<f64>(sub_train, &config).and_then(|(params, _)| {
        let known = known_set([sub_train.triples(), validation.triples()]);
        evaluate(&params, validation.triples(), &known, &config.eval_ks)
    });
    let outcome = match outcome {
        Ok(metrics) => TrialOutcome::Completed { metrics },
        Err(e) => {
            log::warn!("trial {trial_index} failed: {e}");
            TrialOutcome::Failed {
                reason: e.to_string(),
            }
        }
    };
    TrialRecord {
        trial_index,
        config,
        outcome,
    }
}

/// Index of the best completed trial; ties go to the lowest index.
pub fn select_best(trials: &[TrialRecord], metric: SelectionMetric) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, t) in trials.iter().enumerate() {
        let Some(v) = t.metrics().and_then(|m| metric.value(m)) else {
            continue;
        };
        if v.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, b)| metric.improves(v, b)) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i).ok_or(Error::AllTrialsFailed(trials.len()))
}

/// Replaceable search strategy: how the next configuration is proposed and
/// how a whole search is run.
pub trait HyperparameterOptimizer {
    fn propose(&mut self, space: &SearchSpace, trial_index: usize) -> Result<ExperimentConfig>;

    fn search(&mut self, kg_train: &IndexedKG, space: &SearchSpace) -> Result<SearchOutcome>;
}

/// Uniform random search with seeded sampling and per-trial seeds.
#[derive(Debug, Clone)]
pub struct RandomSearch {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSearch {
    pub fn new(seed: u64) -> Self {
        RandomSearch {
            seed,
            rng: rng::stream(seed, Stream::HpoSampling),
        }
    }
}

impl HyperparameterOptimizer for RandomSearch {
    /// Draws the next configuration; proposals must be requested in
    /// `trial_index` order for a search to be reproducible.
    fn propose(&mut self, space: &SearchSpace, trial_index: usize) -> Result<ExperimentConfig> {
        let mut c = space.sample(&mut self.rng);
        c.seed = split_seed(self.seed, trial_index as u64);
        Ok(c)
    }

    fn search(&mut self, kg_train: &IndexedKG, space: &SearchSpace) -> Result<SearchOutcome> {
        space.validate()?;
        let (sub_train, validation) = validation_split(kg_train, self.seed)?;
        let configs = (0..space.trials)
            .map(|i| self.propose(space, i))
            .collect::<Result<Vec<_>>>()?;
        let trials: Vec<TrialRecord> = configs
            .into_par_iter()
            .enumerate()
            .map(|(i, c)| run_trial(i, c, &sub_train, &validation))
            .collect();
        let best_index = select_best(&trials, space.selection_metric)?;
        log::info!(
            "best trial {best_index} of {} by {}",
            trials.len(),
            space.selection_metric
        );
        Ok(SearchOutcome {
            selection_metric: space.selection_metric,
            best_index,
            trials,
            sub_train: sub_train.triples().to_vec(),
            validation: validation.triples().to_vec(),
        })
    }
}

/// Runs [`RandomSearch`] with `seed`.
pub fn random_search(kg_train: &IndexedKG, space: &SearchSpace, seed: u64) -> Result<SearchOutcome> {
    RandomSearch::new(seed).search(kg_train, space)
}
