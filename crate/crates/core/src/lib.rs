//! Knowledge graph embedding toolkit: ingestion, nine scoring models,
//! negative-sampling training, rank-based evaluation, random-search
//! hyper-parameter optimization, inference and reproducible experiment
//! bundles.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the common `f64` instantiation.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod fsutil;
pub mod hpo;
pub mod inference;
pub mod ingest;
pub mod kg;
pub mod models;
pub mod rng;
pub mod scalar;
pub mod synthetic;
pub mod training;

pub use artifacts::{export_experiment, load_experiment, ExperimentRecord, LoadedExperiment};
pub use config::{ExperimentConfig, FilterSetting, LossKind};
pub use error::{Error, Result};
pub use evaluation::{evaluate, RankMetrics};
pub use experiment::{run_experiment, run_hpo, ExperimentRun};
pub use hpo::{random_search, SearchSpace, SelectionMetric, TrialRecord};
pub use ingest::SourceFormat;
pub use kg::{build_index, split, IndexedKG, Triple, TripleIds};
pub use models::{KgeModel, ModelName, ModelParams, ModelSpec};
pub use scalar::Scalar;
pub use training::{train, TrainingHistory};

pub type ModelParamsF64 = models::ModelParams<f64>;
pub type ModelParamsF32 = models::ModelParams<f32>;
pub type GradientF64 = models::Gradient<f64>;
pub type GradientF32 = models::Gradient<f32>;
