//! End-to-end runs: index, split, train, evaluate.

use crate::artifacts::ExperimentRecord;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::evaluation::{evaluate, known_set, RankMetrics};
use crate::hpo::{random_search, SearchOutcome, SearchSpace};
use crate::kg::{build_index, split, IndexedKG, Triple};
use crate::models::ModelParams;
use crate::training::{train, TrainingHistory};

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub config: ExperimentConfig,
    pub train: IndexedKG,
    pub test: IndexedKG,
    pub params: ModelParams<f64>,
    pub metrics: RankMetrics,
    pub history: TrainingHistory,
}

impl ExperimentRun {
    pub fn record(&self) -> ExperimentRecord<'_, f64> {
        ExperimentRecord {
            config: &self.config,
            train: &self.train,
            test: &self.test,
            params: &self.params,
            metrics: &self.metrics,
            history: &self.history,
            trials: None,
        }
    }
}

/// Trains `config` on an existing split and evaluates on `test` with
/// train ∪ test as the filter set.
pub fn train_and_evaluate(
    config: &ExperimentConfig,
    train_kg: IndexedKG,
    test_kg: IndexedKG,
) -> Result<ExperimentRun> {
    let (params, history) = train::<f64>(&train_kg, config)?;
    let known = known_set([train_kg.triples(), test_kg.triples()]);
    let metrics = evaluate(&params, test_kg.triples(), &known, &config.eval_ks)?;
    log::info!(
        "test: filtered mean rank {:.3}, raw mean rank {:.3}",
        metrics.mean_rank_filtered,
        metrics.mean_rank_raw
    );
    Ok(ExperimentRun {
        config: config.clone(),
        train: train_kg,
        test: test_kg,
        params,
        metrics,
        history,
    })
}

/// Training mode: indexes `triples`, splits by `config.split_ratio` and
/// `config.seed`, trains and evaluates.
pub fn run_experiment(triples: &[Triple], config: &ExperimentConfig) -> Result<ExperimentRun> {
    config.validate()?;
    let kg = build_index(triples)?;
    let (train_kg, test_kg) = split(&kg, config.split_ratio, config.seed)?;
    log::info!(
        "{} entities, {} relations; {} train / {} test triples",
        kg.num_entities(),
        kg.num_relations(),
        train_kg.triples().len(),
        test_kg.triples().len()
    );
    train_and_evaluate(config, train_kg, test_kg)
}

/// HPO mode: splits by the space's ratio and seed, searches on the training
/// part, then retrains the winning configuration on the whole training part
/// and evaluates it on the test part.
pub fn run_hpo(triples: &[Triple], space: &SearchSpace) -> Result<(ExperimentRun, SearchOutcome)> {
    space.validate()?;
    let kg = build_index(triples)?;
    let (train_kg, test_kg) = split(&kg, space.split_ratio, space.seed)?;
    let outcome = random_search(&train_kg, space, space.seed)?;
    let best = outcome.best().config.clone();
    let run = train_and_evaluate(&best, train_kg, test_kg)?;
    Ok((run, outcome))
}
