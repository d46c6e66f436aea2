//! Embedding models: parameters, scoring, analytic gradients and norm
//! constraints.
//!
//! Scores follow one convention for every model: higher means more
//! plausible. Distance-based models return the negated distance.
//!
//! | model    | score                                              |
//! |----------|----------------------------------------------------|
//! | TransE   | `-‖h + r − t‖_p`                                   |
//! | UM       | `-‖h − t‖₂²`                                       |
//! | SE       | `-‖M₁h − M₂t‖_p`                                   |
//! | TransH   | `-‖h⊥ + d_r − t⊥‖₂²`, `x⊥ = x − (wᵀx)w`            |
//! | TransR   | `-‖M h + r − M t‖₂²`                               |
//! | TransD   | `-‖(I + r_p h_pᵀ)h + r − (I + r_p t_pᵀ)t‖₂²`       |
//! | RESCAL   | `hᵀ W t`                                           |
//! | DistMult | `Σᵢ hᵢ rᵢ tᵢ`                                      |
//! | ERMLP    | `wᵀ tanh(H [h; r; t] + b)`                         |

mod constraints;
mod gradient;
mod params;
mod scoring;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{LossKind, HIDDEN_DIM, P_NORM, RELATION_DIM};
use crate::error::{Error, Result};
use crate::kg::TripleIds;
use crate::scalar::Scalar;

pub use constraints::ConstraintReport;
pub use gradient::{Gradient, ParamKey};
pub use params::{init_params, init_params_with, Family, InitOptions, Matrix, ModelParams, RowIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    TransE,
    TransH,
    TransR,
    TransD,
    #[serde(rename = "um")]
    Um,
    #[serde(rename = "se")]
    Se,
    Rescal,
    DistMult,
    #[serde(rename = "ermlp")]
    ErMlp,
}

impl ModelName {
    pub const ALL: [ModelName; 9] = [
        ModelName::TransE,
        ModelName::TransH,
        ModelName::TransR,
        ModelName::TransD,
        ModelName::Um,
        ModelName::Se,
        ModelName::Rescal,
        ModelName::DistMult,
        ModelName::ErMlp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::TransE => "transe",
            ModelName::TransH => "transh",
            ModelName::TransR => "transr",
            ModelName::TransD => "transd",
            ModelName::Um => "um",
            ModelName::Se => "se",
            ModelName::Rescal => "rescal",
            ModelName::DistMult => "distmult",
            ModelName::ErMlp => "ermlp",
        }
    }

    /// Margin ranking for everything except ER-MLP, which trains with BCE.
    pub fn default_loss(self) -> LossKind {
        match self {
            ModelName::ErMlp => LossKind::BinaryCrossEntropy,
            _ => LossKind::MarginRanking,
        }
    }

    /// `model_specific` keys this model understands.
    pub fn model_specific_keys(self) -> &'static [&'static str] {
        match self {
            ModelName::TransE | ModelName::Se => &[P_NORM],
            ModelName::TransR | ModelName::TransD => &[RELATION_DIM],
            ModelName::ErMlp => &[HIDDEN_DIM],
            _ => &[],
        }
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .trim()
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .collect::<String>()
            .to_ascii_lowercase();
        ModelName::ALL
            .into_iter()
            .find(|m| m.as_str() == norm)
            .or(match norm.as_str() {
                "unstructured" | "unstructuredmodel" => Some(ModelName::Um),
                "structuredembedding" => Some(ModelName::Se),
                _ => None,
            })
            .ok_or_else(|| Error::Config(format!("unknown model {:?}", s.trim())))
    }
}

/// Norm used by the distance in TransE and SE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
}

/// Everything needed to lay out and score a model's parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: ModelName,
    pub entity_dim: usize,
    /// Relation vector length (TransR/TransD); equals `entity_dim` elsewhere.
    pub relation_dim: usize,
    /// ER-MLP hidden width; ignored by other models.
    pub hidden_dim: usize,
    pub norm: Norm,
}

impl ModelSpec {
    pub fn new(
        name: ModelName,
        entity_dim: usize,
        relation_dim: usize,
        hidden_dim: usize,
        norm: Norm,
    ) -> Self {
        let relation_dim = match name {
            ModelName::TransR | ModelName::TransD => relation_dim,
            _ => entity_dim,
        };
        ModelSpec {
            name,
            entity_dim,
            relation_dim,
            hidden_dim,
            norm,
        }
    }

    /// Spec with all dimensions equal to `d` and the L2 norm.
    pub fn simple(name: ModelName, d: usize) -> Self {
        ModelSpec::new(name, d, d, d, Norm::L2)
    }
}

/// Loss applied to a (positive, negative) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossFn<S> {
    /// `max(0, margin − f_pos + f_neg)`
    MarginRanking { margin: S },
    /// `bce(f_pos, 1) + bce(f_neg, 0)`
    BinaryCrossEntropy,
}

impl<S: Scalar> LossFn<S> {
    pub fn from_config(kind: LossKind, margin: f64) -> Self {
        match kind {
            LossKind::MarginRanking => LossFn::MarginRanking {
                margin: S::lit(margin),
            },
            LossKind::BinaryCrossEntropy => LossFn::BinaryCrossEntropy,
        }
    }
}

/// When the training loop offers the model a chance to enforce constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintStage {
    AfterBatch,
    AfterEpoch,
}

/// What the training, evaluation and inference code needs from a model.
///
/// `score_batch` is the prediction entry point; `loss_and_grad` is the
/// forward pass over a batch of positives and their paired negatives.
/// Anything implementing this trait can be trained with
/// [`crate::training::train_model`] and evaluated with
/// [`crate::evaluation::evaluate`].
pub trait KgeModel<S: Scalar>: Sync {
    fn num_entities(&self) -> usize;
    fn num_relations(&self) -> usize;

    /// Plausibility of each triple, positionally aligned with the input.
    fn score_batch(&self, triples: &[TripleIds]) -> Result<Vec<S>>;

    /// Mean pair loss and mean gradient over `positives[i]` / `negatives[i]`.
    fn loss_and_grad(
        &self,
        positives: &[TripleIds],
        negatives: &[TripleIds],
        loss: LossFn<S>,
    ) -> Result<(S, Gradient<S>)>;

    /// `θ ← θ − lr · grad`
    fn apply_gradient(&mut self, grad: &Gradient<S>, learning_rate: S);

    fn apply_constraints(&mut self, _stage: ConstraintStage) {}
}

impl<S: Scalar> KgeModel<S> for ModelParams<S> {
    fn num_entities(&self) -> usize {
        self.num_entities()
    }

    fn num_relations(&self) -> usize {
        self.num_relations()
    }

    fn score_batch(&self, triples: &[TripleIds]) -> Result<Vec<S>> {
        triples
            .iter()
            .enumerate()
            .map(|(position, &t)| {
                self.score(t).map_err(|e| Error::AtPosition {
                    position,
                    source: Box::new(e),
                })
            })
            .collect()
    }

    fn loss_and_grad(
        &self,
        positives: &[TripleIds],
        negatives: &[TripleIds],
        loss: LossFn<S>,
    ) -> Result<(S, Gradient<S>)> {
        self.batch_loss_and_grad(positives, negatives, loss)
    }

    fn apply_gradient(&mut self, grad: &Gradient<S>, learning_rate: S) {
        self.sgd_step(grad, learning_rate);
    }

    fn apply_constraints(&mut self, stage: ConstraintStage) {
        let due = match self.spec().name {
            ModelName::TransE | ModelName::TransH => stage == ConstraintStage::AfterBatch,
            ModelName::TransR | ModelName::TransD => stage == ConstraintStage::AfterEpoch,
            _ => false,
        };
        if due {
            ModelParams::apply_constraints(self);
        }
    }
}
