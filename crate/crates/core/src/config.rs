//! Experiment configuration and its canonical JSON form.
//!
//! Keys are `lower_snake_case`; enum values are lowercase strings. The
//! canonical document has sorted keys and shortest round-trip floats, so
//! `parse(render(c)) == c` and equal configs render to equal bytes.
//!
//! ```json
//! {
//!   "batch_size": 32,
//!   "embedding_dim": 50,
//!   "eval_ks": [1, 3, 10],
//!   "filter_setting": "both",
//!   "learning_rate": 0.01,
//!   "loss": "margin_ranking",
//!   "margin": 1.0,
//!   "model_name": "transe",
//!   "model_specific": {"p_norm": 1},
//!   "num_epochs": 100,
//!   "seed": 0,
//!   "split_ratio": 0.8
//! }
//! ```
//!
//! Optional keys: `device` (only `"cpu"`), and `metadata` with
//! `dataset_path`, `dataset_format`, `dataset_url`, `reference`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SourceFormat;
use crate::models::{ModelName, ModelSpec, Norm};

/// Keys accepted in `model_specific`.
pub const RELATION_DIM: &str = "relation_dim";
pub const HIDDEN_DIM: &str = "hidden_dim";
pub const P_NORM: &str = "p_norm";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    MarginRanking,
    BinaryCrossEntropy,
}

impl FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "margin_ranking" | "margin" | "mrl" => Ok(LossKind::MarginRanking),
            "binary_cross_entropy" | "bce" => Ok(LossKind::BinaryCrossEntropy),
            other => Err(Error::Config(format!("unknown loss {other:?}"))),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::MarginRanking => "margin_ranking",
            LossKind::BinaryCrossEntropy => "binary_cross_entropy",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterSetting {
    Raw,
    Filtered,
    Both,
}

impl FromStr for FilterSetting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "raw" => Ok(FilterSetting::Raw),
            "filtered" => Ok(FilterSetting::Filtered),
            "both" => Ok(FilterSetting::Both),
            other => Err(Error::Config(format!("unknown filter setting {other:?}"))),
        }
    }
}

impl fmt::Display for FilterSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterSetting::Raw => "raw",
            FilterSetting::Filtered => "filtered",
            FilterSetting::Both => "both",
        })
    }
}

/// Training device. Only the CPU exists; the key is kept so configs stay
/// compatible with tools that record a device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Device {
    #[default]
    Cpu,
}

impl Device {
    fn is_default(&self) -> bool {
        *self == Device::Cpu
    }
}

impl FromStr for Device {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cpu" => Ok(Device::Cpu),
            other => Err(Error::Config(format!(
                "unsupported device {other:?}; only \"cpu\" is available"
            ))),
        }
    }
}

/// Free-form provenance carried with a configuration.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_format: Option<SourceFormat>,
    /// Public location of the dataset (checked by the zoo validator).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_url: Option<String>,
    /// Publication describing the experiment (checked by the zoo validator).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
}

impl ExperimentMetadata {
    pub fn is_empty(&self) -> bool {
        *self == ExperimentMetadata::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model_name: ModelName,
    pub embedding_dim: usize,
    #[serde(default)]
    pub model_specific: BTreeMap<String, usize>,
    pub learning_rate: f64,
    pub margin: f64,
    pub loss: LossKind,
    pub num_epochs: usize,
    pub batch_size: usize,
    pub split_ratio: f64,
    pub seed: u64,
    pub eval_ks: Vec<usize>,
    pub filter_setting: FilterSetting,
    #[serde(default, skip_serializing_if = "Device::is_default")]
    pub device: Device,
    #[serde(default, skip_serializing_if = "ExperimentMetadata::is_empty")]
    pub metadata: ExperimentMetadata,
}

impl ExperimentConfig {
    /// A valid configuration for `model` with conventional defaults.
    pub fn new(model: ModelName) -> Self {
        ExperimentConfig {
            model_name: model,
            embedding_dim: 50,
            model_specific: BTreeMap::new(),
            learning_rate: 0.01,
            margin: 1.0,
            loss: model.default_loss(),
            num_epochs: 100,
            batch_size: 32,
            split_ratio: 0.8,
            seed: 0,
            eval_ks: vec![1, 3, 10],
            filter_setting: FilterSetting::Both,
            device: Device::Cpu,
            metadata: ExperimentMetadata::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.embedding_dim == 0 {
            return bad("embedding_dim must be at least 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return bad(format!("margin must be non-negative, got {}", self.margin));
        }
        if self.num_epochs == 0 {
            return bad("num_epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad(format!(
                "split_ratio must lie in (0, 1), got {}",
                self.split_ratio
            ));
        }
        if self.eval_ks.is_empty() || self.eval_ks.contains(&0) {
            return bad("eval_ks must be a non-empty list of positive integers".into());
        }
        let allowed = self.model_name.model_specific_keys();
        for (key, &value) in &self.model_specific {
            if !allowed.contains(&key.as_str()) {
                return bad(format!(
                    "model_specific key {key:?} does not apply to {}",
                    self.model_name
                ));
            }
            match key.as_str() {
                P_NORM if value != 1 && value != 2 => {
                    return bad(format!("p_norm must be 1 or 2, got {value}"))
                }
                RELATION_DIM | HIDDEN_DIM if value == 0 => {
                    return bad(format!("{key} must be at least 1"))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Model dimensions and norm derived from this configuration.
    pub fn model_spec(&self) -> ModelSpec {
        let d = self.embedding_dim;
        let get = |k: &str, default: usize| self.model_specific.get(k).copied().unwrap_or(default);
        let norm = match get(P_NORM, 2) {
            1 => Norm::L1,
            _ => Norm::L2,
        };
        ModelSpec::new(self.model_name, d, get(RELATION_DIM, d), get(HIDDEN_DIM, d), norm)
    }

    /// Parses and validates a configuration document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_canonical_json(&self) -> Result<String> {
        canonical_json(self)
    }
}

/// Pretty JSON with recursively sorted object keys and a trailing newline.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    // serde_json::Map is a BTreeMap unless `preserve_order` is enabled
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}
