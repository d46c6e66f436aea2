//! Experiment bundles: everything needed to inspect, reload and reproduce a
//! trained model, as one directory.
//!
//! | file                        | content                                             |
//! |-----------------------------|-----------------------------------------------------|
//! | `configuration.json`        | the [`ExperimentConfig`]                             |
//! | `evaluation_summary.json`   | the [`RankMetrics`] on the test split               |
//! | `entity_to_id.json`         | label → id                                          |
//! | `relation_to_id.json`       | label → id                                          |
//! | `entity_embeddings.json`    | label → vector                                      |
//! | `relation_embeddings.json`  | label → vector (`[]` for models without one)        |
//! | `<family>.json`             | every other tensor family (see below)               |
//! | `trained_model.bin`         | all parameters, see [`binary`]                      |
//! | `training_history.json`     | per-epoch mean loss                                 |
//! | `train_triples.tsv`         | training split, labels                              |
//! | `test_triples.tsv`          | test split, labels                                  |
//! | `hpo_trials.json`           | optional, all HPO trial records                     |
//!
//! Extra families indexed by entity or relation are label-keyed objects like
//! the embeddings; ER-MLP weights are arrays of rows. JSON keys are sorted
//! and floats use the shortest representation that parses back to the same
//! value, so two runs with identical inputs produce identical bytes.
//!
//! A bundle is assembled in a hidden staging directory next to the target
//! and renamed into place, so a bundle directory is either complete or
//! absent.

pub mod binary;
pub mod zoo;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::Value;

use crate::config::{canonical_json, ExperimentConfig};
use crate::error::{Error, Result};
use crate::evaluation::RankMetrics;
use crate::hpo::TrialRecord;
use crate::kg::{IndexedKG, Triple, TripleIds, Vocab};
use crate::models::{Family, Matrix, ModelParams, RowIndex};
use crate::scalar::Scalar;
use crate::training::TrainingHistory;

pub const CONFIGURATION: &str = "configuration.json";
pub const EVALUATION_SUMMARY: &str = "evaluation_summary.json";
pub const ENTITY_TO_ID: &str = "entity_to_id.json";
pub const RELATION_TO_ID: &str = "relation_to_id.json";
pub const ENTITY_EMBEDDINGS: &str = "entity_embeddings.json";
pub const RELATION_EMBEDDINGS: &str = "relation_embeddings.json";
pub const TRAINED_MODEL: &str = "trained_model.bin";
pub const TRAINING_HISTORY: &str = "training_history.json";
pub const TRAIN_TRIPLES: &str = "train_triples.tsv";
pub const TEST_TRIPLES: &str = "test_triples.tsv";
pub const HPO_TRIALS: &str = "hpo_trials.json";

/// Files every bundle must contain.
pub const REQUIRED_FILES: [&str; 7] = [
    CONFIGURATION,
    EVALUATION_SUMMARY,
    ENTITY_TO_ID,
    RELATION_TO_ID,
    ENTITY_EMBEDDINGS,
    RELATION_EMBEDDINGS,
    TRAINED_MODEL,
];

/// What gets exported. `train` and `test` are views over one index.
#[derive(Debug, Clone, Copy)]
pub struct ExperimentRecord<'a, S> {
    pub config: &'a ExperimentConfig,
    pub train: &'a IndexedKG,
    pub test: &'a IndexedKG,
    pub params: &'a ModelParams<S>,
    pub metrics: &'a RankMetrics,
    pub history: &'a TrainingHistory,
    pub trials: Option<&'a [TrialRecord]>,
}

/// A bundle read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedExperiment<S> {
    pub config: ExperimentConfig,
    pub params: ModelParams<S>,
    pub metrics: RankMetrics,
    pub entities: Arc<Vocab>,
    pub relations: Arc<Vocab>,
}

impl<S: Scalar> LoadedExperiment<S> {
    /// An [`IndexedKG`] over the bundle's dictionaries holding `triples`.
    pub fn index(&self, triples: Vec<TripleIds>) -> Result<IndexedKG> {
        IndexedKG::from_parts(self.entities.clone(), self.relations.clone(), triples)
    }
}

fn label_rows<S: Scalar>(vocab: &Vocab, rows: Option<&Matrix<S>>) -> Value {
    let map: serde_json::Map<String, Value> = vocab
        .labels()
        .iter()
        .enumerate()
        .map(|(i, label)| {
            let row: Vec<f64> = rows
                .map(|m| m.row(i).iter().map(|x| x.widen()).collect())
                .unwrap_or_default();
            (label.clone(), Value::from(row))
        })
        .collect();
    Value::Object(map)
}

fn position_rows<S: Scalar>(m: &Matrix<S>) -> Value {
    Value::from(
        m.iter_rows()
            .map(|r| Value::from(r.iter().map(|x| x.widen()).collect::<Vec<f64>>()))
            .collect::<Vec<_>>(),
    )
}

fn triples_tsv(kg: &IndexedKG) -> Result<Vec<u8>> {
    let labelled = kg
        .triples()
        .iter()
        .map(|&t| kg.decode(t))
        .collect::<Result<Vec<Triple>>>()?;
    let mut out = Vec::new();
    crate::ingest::write_tsv(&mut out, &labelled).map_err(|e| Error::io("rendering triples", e))?;
    Ok(out)
}

fn json_bytes<T: Serialize + ?Sized>(v: &T) -> Result<Vec<u8>> {
    Ok(canonical_json(v)?.into_bytes())
}

/// File name → content of a bundle.
pub fn render_bundle<S: Scalar>(rec: &ExperimentRecord<'_, S>) -> Result<BTreeMap<String, Vec<u8>>> {
    if !Arc::ptr_eq(rec.train.entities(), rec.test.entities())
        && rec.train.entities() != rec.test.entities()
    {
        return Err(Error::Format("train and test use different entity dictionaries".into()));
    }
    let entities = rec.train.entities();
    let relations = rec.train.relations();
    if rec.params.num_entities() != entities.len() || rec.params.num_relations() != relations.len() {
        return Err(Error::Model(format!(
            "parameters cover {} entities / {} relations, dictionaries have {} / {}",
            rec.params.num_entities(),
            rec.params.num_relations(),
            entities.len(),
            relations.len()
        )));
    }
    if rec.params.spec() != &rec.config.model_spec() {
        return Err(Error::Model("parameters do not match the configuration".into()));
    }
    let mut files = BTreeMap::new();
    let mut put = |name: &str, bytes: Vec<u8>| {
        files.insert(name.to_string(), bytes);
    };
    put(CONFIGURATION, rec.config.to_canonical_json()?.into_bytes());
    put(EVALUATION_SUMMARY, json_bytes(rec.metrics)?);
    put(ENTITY_TO_ID, json_bytes(&entities.to_map())?);
    put(RELATION_TO_ID, json_bytes(&relations.to_map())?);
    put(
        ENTITY_EMBEDDINGS,
        json_bytes(&label_rows(entities, rec.params.tensor(Family::EntityEmbeddings)))?,
    );
    put(
        RELATION_EMBEDDINGS,
        json_bytes(&label_rows(relations, rec.params.tensor(Family::RelationEmbeddings)))?,
    );
    for (family, m) in rec.params.tensors() {
        if matches!(family, Family::EntityEmbeddings | Family::RelationEmbeddings) {
            continue;
        }
        let value = match family.row_index() {
            RowIndex::Entity => label_rows(entities, Some(m)),
            RowIndex::Relation => label_rows(relations, Some(m)),
            RowIndex::Position => position_rows(m),
        };
        put(&format!("{}.json", family.as_str()), json_bytes(&value)?);
    }
    put(TRAINED_MODEL, binary::encode(rec.params));
    put(TRAINING_HISTORY, json_bytes(rec.history)?);
    put(TRAIN_TRIPLES, triples_tsv(rec.train)?);
    put(TEST_TRIPLES, triples_tsv(rec.test)?);
    if let Some(trials) = rec.trials {
        put(HPO_TRIALS, json_bytes(trials)?);
    }
    Ok(files)
}

/// Writes `files` as the directory `dir`, atomically.
///
/// An existing non-empty `dir` is an error unless `overwrite` is set, in
/// which case it is replaced as a whole.
pub fn write_bundle_dir(dir: &Path, files: &BTreeMap<String, Vec<u8>>, overwrite: bool) -> Result<()> {
    let io = |ctx: String| move |e| Error::io(ctx, e);
    let non_empty = match std::fs::read_dir(dir) {
        Ok(mut it) => it.next().is_some(),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => false,
        Err(e) => return Err(Error::io(format!("reading {}", dir.display()), e)),
    };
    if non_empty && !overwrite {
        return Err(Error::DirectoryNotEmpty(dir.to_path_buf()));
    }
    let parent = match dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&parent).map_err(io(format!("creating {}", parent.display())))?;
    let staging = tempfile::Builder::new()
        .prefix(".kgforge-staging-")
        .tempdir_in(&parent)
        .map_err(io(format!("creating staging directory in {}", parent.display())))?;
    for (name, bytes) in files {
        let p = staging.path().join(name);
        std::fs::write(&p, bytes).map_err(io(format!("writing {}", p.display())))?;
    }
    if dir.exists() {
        if non_empty {
            let old = tempfile::Builder::new()
                .prefix(".kgforge-replaced-")
                .tempdir_in(&parent)
                .map_err(io("creating backup directory".into()))?;
            let backup = old.path().join("bundle");
            std::fs::rename(dir, &backup).map_err(io(format!("moving {}", dir.display())))?;
            std::fs::rename(staging.path(), dir).map_err(io(format!("writing {}", dir.display())))?;
            drop(old);
        } else {
            std::fs::remove_dir(dir).map_err(io(format!("replacing {}", dir.display())))?;
            std::fs::rename(staging.path(), dir).map_err(io(format!("writing {}", dir.display())))?;
        }
    } else {
        std::fs::rename(staging.path(), dir).map_err(io(format!("writing {}", dir.display())))?;
    }
    Ok(())
}

/// Exports a bundle to `dir`.
pub fn export_experiment<S: Scalar>(
    dir: &Path,
    record: &ExperimentRecord<'_, S>,
    overwrite: bool,
) -> Result<()> {
    let files = render_bundle(record)?;
    write_bundle_dir(dir, &files, overwrite)?;
    log::info!("wrote bundle {}", dir.display());
    Ok(())
}

pub(crate) fn read_required(dir: &Path, name: &str) -> Result<Vec<u8>> {
    let path = dir.join(name);
    match std::fs::read(&path) {
        Ok(b) => Ok(b),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingFile(PathBuf::from(name))),
        Err(e) => Err(Error::io(format!("reading {}", path.display()), e)),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(dir: &Path, name: &str) -> Result<T> {
    let bytes = read_required(dir, name)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Format(format!("{name}: {e}")))
}

pub(crate) fn read_config(dir: &Path) -> Result<ExperimentConfig> {
    let bytes = read_required(dir, CONFIGURATION)?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Format(format!("{CONFIGURATION}: {e}")))?;
    ExperimentConfig::from_json(&text)
}

/// Reads the model parameters and checks them against the configuration.
pub fn load_params<S: Scalar>(dir: &Path, config: &ExperimentConfig) -> Result<ModelParams<S>> {
    let params = binary::decode::<S>(&read_required(dir, TRAINED_MODEL)?)?;
    if params.spec() != &config.model_spec() {
        return Err(Error::Format(format!(
            "{TRAINED_MODEL} holds {:?}, {CONFIGURATION} describes {:?}",
            params.spec(),
            config.model_spec()
        )));
    }
    Ok(params)
}

fn read_vocab(dir: &Path, name: &str) -> Result<Arc<Vocab>> {
    let map: BTreeMap<String, usize> = read_json(dir, name)?;
    let v = Vocab::from_map(&map).map_err(|e| Error::Format(format!("{name}: {e}")))?;
    Ok(Arc::new(v))
}

/// Loads a bundle. Every required file must be present; a missing one is
/// reported by name.
pub fn load_experiment<S: Scalar>(dir: &Path) -> Result<LoadedExperiment<S>> {
    for name in REQUIRED_FILES {
        if !dir.join(name).is_file() {
            return Err(Error::MissingFile(PathBuf::from(name)));
        }
    }
    let config = read_config(dir)?;
    let metrics: RankMetrics = read_json(dir, EVALUATION_SUMMARY)?;
    let entities = read_vocab(dir, ENTITY_TO_ID)?;
    let relations = read_vocab(dir, RELATION_TO_ID)?;
    let params = load_params::<S>(dir, &config)?;
    if params.num_entities() != entities.len() || params.num_relations() != relations.len() {
        return Err(Error::Format(format!(
            "{TRAINED_MODEL} covers {} entities / {} relations, dictionaries have {} / {}",
            params.num_entities(),
            params.num_relations(),
            entities.len(),
            relations.len()
        )));
    }
    Ok(LoadedExperiment {
        config,
        params,
        metrics,
        entities,
        relations,
    })
}

/// Reads one of the bundle's triple files against the bundle dictionaries.
pub fn load_split(
    dir: &Path,
    name: &str,
    entities: &Arc<Vocab>,
    relations: &Arc<Vocab>,
) -> Result<Vec<TripleIds>> {
    let triples = crate::ingest::read_tsv(&dir.join(name))?;
    let kg = IndexedKG::from_parts(entities.clone(), relations.clone(), Vec::new())?;
    triples.iter().map(|t| kg.encode(t)).collect()
}

pub fn load_trials(dir: &Path) -> Result<Option<Vec<TrialRecord>>> {
    if dir.join(HPO_TRIALS).is_file() {
        read_json(dir, HPO_TRIALS).map(Some)
    } else {
        Ok(None)
    }
}
