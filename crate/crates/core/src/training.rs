//! Open-world training: corruption sampling, pairwise losses and plain SGD.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::kg::{IndexedKG, TripleIds};
use crate::models::{init_params, ConstraintStage, KgeModel, LossFn, ModelParams};
use crate::rng::{self, Stream};
use crate::scalar::{softplus, Scalar};

/// `max(0, margin − f_pos + f_neg)`. NaN propagates so divergence is seen.
pub fn margin_loss<S: Scalar>(f_pos: S, f_neg: S, margin: S) -> S {
    let x = margin - f_pos + f_neg;
    if x < S::zero() {
        S::zero()
    } else {
        x
    }
}

/// Binary cross-entropy of a logit, `−[y log σ(s) + (1−y) log(1−σ(s))]`,
/// evaluated as `softplus(−s)` or `softplus(s)`.
pub fn bce_loss<S: Scalar>(score: S, positive: bool) -> S {
    if positive {
        softplus(-score)
    } else {
        softplus(score)
    }
}

/// Corrupts the head or the tail (each with probability ½) with an entity
/// drawn uniformly from all entities other than the replaced one. The
/// relation is never changed, and the result may be a known true triple.
pub fn sample_negative<R: Rng + ?Sized>(
    pos: TripleIds,
    num_entities: usize,
    rng: &mut R,
) -> Result<TripleIds> {
    if num_entities < 2 {
        return Err(Error::Model(format!(
            "corruption needs at least 2 entities, got {num_entities}"
        )));
    }
    let replace = |orig: usize, rng: &mut R| {
        let x = rng.random_range(0..num_entities - 1);
        if x >= orig {
            x + 1
        } else {
            x
        }
    };
    Ok(if rng.random_bool(0.5) {
        TripleIds {
            head: replace(pos.head, rng),
            ..pos
        }
    } else {
        TripleIds {
            tail: replace(pos.tail, rng),
            ..pos
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    /// Mean pair loss of each epoch.
    pub epoch_losses: Vec<f64>,
    pub epochs_run: usize,
    /// Not exported: it would make otherwise identical bundles differ.
    #[serde(skip)]
    pub wall_seconds: f64,
}

/// Initializes a model from `config` and trains it on `kg_train`.
pub fn train<S: Scalar>(
    kg_train: &IndexedKG,
    config: &ExperimentConfig,
) -> Result<(ModelParams<S>, TrainingHistory)> {
    config.validate()?;
    let mut params = init_params::<S>(
        config.model_spec(),
        kg_train.num_entities(),
        kg_train.num_relations(),
        config.seed,
    )?;
    let history = train_model(&mut params, kg_train.triples(), config)?;
    Ok((params, history))
}

/// Runs the training loop on any [`KgeModel`].
///
/// Each epoch shuffles the triples, walks them in batches of `batch_size`
/// (the last batch may be smaller), pairs every positive with one corrupted
/// negative, and takes one SGD step on the mean batch gradient. Shuffling and
/// corruption draw from separate seeded streams.
pub fn train_model<S: Scalar, M: KgeModel<S>>(
    model: &mut M,
    triples: &[TripleIds],
    config: &ExperimentConfig,
) -> Result<TrainingHistory> {
    config.validate()?;
    if triples.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let start = Instant::now();
    let loss = LossFn::<S>::from_config(config.loss, config.margin);
    let lr = S::lit(config.learning_rate);
    let num_entities = model.num_entities();
    let mut shuffle_rng = rng::stream(config.seed, Stream::Shuffle);
    let mut corrupt_rng = rng::stream(config.seed, Stream::Corruption);

    let mut order = triples.to_vec();
    let mut epoch_losses = Vec::with_capacity(config.num_epochs);
    let mut negatives = Vec::with_capacity(config.batch_size);
    for epoch in 0..config.num_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0f64;
        for (batch_index, batch) in order.chunks(config.batch_size).enumerate() {
            negatives.clear();
            for &p in batch {
                negatives.push(sample_negative(p, num_entities, &mut corrupt_rng)?);
            }
            let (batch_loss, grad) = model.loss_and_grad(batch, &negatives, loss)?;
            if !batch_loss.is_finite() || !grad.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_index,
                });
            }
            total += batch_loss.widen() * batch.len() as f64;
            model.apply_gradient(&grad, lr);
            model.apply_constraints(ConstraintStage::AfterBatch);
        }
        model.apply_constraints(ConstraintStage::AfterEpoch);
        let mean = total / order.len() as f64;
        log::debug!("epoch {epoch}: mean loss {mean}");
        epoch_losses.push(mean);
    }
    Ok(TrainingHistory {
        epochs_run: epoch_losses.len(),
        epoch_losses,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}
