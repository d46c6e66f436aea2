//! Mechanical checks for model-zoo entries.
//!
//! A zoo is a directory tree `<domain>/<dataset>/<experiment>/`, each leaf
//! holding one bundle plus a `README.md`. Some requirements are judgments a
//! program cannot make; those are replaced by syntactic proxies:
//!
//! | requirement | checked as                                                        |
//! |-------------|-------------------------------------------------------------------|
//! | i           | `metadata.reference` in the configuration is non-empty             |
//! | ii          | all bundle files present, mappings and embeddings shape-consistent |
//! | iii         | `metadata.dataset_url` parses as an http(s) URL with a host        |
//! | iv          | `README.md` present and non-empty                                  |
//! | v           | model loads from `trained_model.bin` and scores a probe triple;    |
//! |             | when the bundle's triple files are present, re-evaluation          |
//! |             | reproduces `evaluation_summary.json` exactly                      |
//! | layout      | the entry sits exactly three levels below the zoo root             |
//!
//! Every check runs independently and the validator never writes.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use super::*;
use crate::evaluation::{evaluate, known_set};

pub const README: &str = "README.md";
pub const LAYOUT_DEPTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Requirement {
    Reference,
    Completeness,
    DatasetUrl,
    Readme,
    Instantiation,
    Layout,
}

impl Requirement {
    pub const ALL: [Requirement; 6] = [
        Requirement::Reference,
        Requirement::Completeness,
        Requirement::DatasetUrl,
        Requirement::Readme,
        Requirement::Instantiation,
        Requirement::Layout,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Requirement::Reference => "i (publication reference)",
            Requirement::Completeness => "ii (bundle completeness)",
            Requirement::DatasetUrl => "iii (dataset URL)",
            Requirement::Readme => "iv (README description)",
            Requirement::Instantiation => "v (model instantiation)",
            Requirement::Layout => "layout (<domain>/<dataset>/<experiment>)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub requirement: Requirement,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub entry: PathBuf,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, r: Requirement) -> &CheckResult {
        self.checks
            .iter()
            .find(|c| c.requirement == r)
            .expect("every requirement is checked")
    }

    pub fn failures(&self) -> Vec<Requirement> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.requirement)
            .collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "zoo entry {}", self.entry.display())?;
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "  {mark} {}: {}", c.requirement.label(), c.detail)?;
        }
        let verdict = if self.passed() { "valid" } else { "invalid" };
        write!(f, "entry is {verdict}")
    }
}

type Check = std::result::Result<String, String>;

fn check_reference(cfg: &std::result::Result<ExperimentConfig, String>) -> Check {
    let cfg = cfg.as_ref().map_err(|e| format!("configuration unreadable: {e}"))?;
    match cfg.metadata.reference.as_deref().map(str::trim) {
        Some(r) if !r.is_empty() => Ok(format!("reference: {r}")),
        _ => Err("metadata.reference is missing or empty".into()),
    }
}

fn check_dataset_url(cfg: &std::result::Result<ExperimentConfig, String>) -> Check {
    let cfg = cfg.as_ref().map_err(|e| format!("configuration unreadable: {e}"))?;
    let raw = cfg
        .metadata
        .dataset_url
        .as_deref()
        .ok_or("metadata.dataset_url is missing")?;
    let url = url::Url::parse(raw).map_err(|e| format!("{raw:?} is not a URL: {e}"))?;
    if !matches!(url.scheme(), "http" | "https") || url.host().is_none() {
        return Err(format!("{raw:?} is not an http(s) URL with a host"));
    }
    Ok(format!("{url} (syntax only, not fetched)"))
}

fn check_readme(dir: &Path) -> Check {
    match std::fs::read_to_string(dir.join(README)) {
        Ok(s) if !s.trim().is_empty() => Ok(format!("{README} present")),
        Ok(_) => Err(format!("{README} is empty")),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(format!("missing {README}")),
        Err(e) => Err(format!("{README}: {e}")),
    }
}

fn object_rows(dir: &Path, name: &str) -> std::result::Result<Vec<(String, usize)>, String> {
    let bytes = read_required(dir, name).map_err(|e| e.to_string())?;
    let v: Value = serde_json::from_slice(&bytes).map_err(|e| format!("{name}: {e}"))?;
    let obj = v.as_object().ok_or(format!("{name} is not a JSON object"))?;
    obj.iter()
        .map(|(k, row)| {
            let row = row.as_array().ok_or(format!("{name}: row {k:?} is not an array"))?;
            if !row.iter().all(Value::is_number) {
                return Err(format!("{name}: row {k:?} has non-numeric entries"));
            }
            Ok((k.clone(), row.len()))
        })
        .collect()
}

fn check_completeness(dir: &Path) -> Check {
    let missing: Vec<&str> = REQUIRED_FILES
        .iter()
        .copied()
        .filter(|n| !dir.join(n).is_file())
        .collect();
    if !missing.is_empty() {
        return Err(format!("missing {}", missing.join(", ")));
    }
    let cfg = read_config(dir).map_err(|e| format!("{CONFIGURATION}: {e}"))?;
    let spec = cfg.model_spec();
    let entities = read_vocab(dir, ENTITY_TO_ID).map_err(|e| e.to_string())?;
    let relations = read_vocab(dir, RELATION_TO_ID).map_err(|e| e.to_string())?;
    let _: RankMetrics = read_json(dir, EVALUATION_SUMMARY).map_err(|e| e.to_string())?;

    let shape = |name: &str, vocab: &Vocab, width: Option<usize>| -> std::result::Result<(), String> {
        let rows = object_rows(dir, name)?;
        if rows.len() != vocab.len() {
            return Err(format!("{name} has {} rows, dictionary has {}", rows.len(), vocab.len()));
        }
        for (label, len) in rows {
            if vocab.id(&label).is_none() {
                return Err(format!("{name}: unknown label {label:?}"));
            }
            if let Some(w) = width {
                if len != w {
                    return Err(format!("{name}: row {label:?} has length {len}, expected {w}"));
                }
            }
        }
        Ok(())
    };
    shape(ENTITY_EMBEDDINGS, &entities, Some(spec.entity_dim))?;
    shape(RELATION_EMBEDDINGS, &relations, None)?;
    Ok(format!(
        "{} files present; {} entities, {} relations",
        REQUIRED_FILES.len(),
        entities.len(),
        relations.len()
    ))
}

fn check_instantiation(dir: &Path) -> Check {
    let cfg = read_config(dir).map_err(|e| e.to_string())?;
    let params = load_params::<f64>(dir, &cfg).map_err(|e| format!("cannot load {TRAINED_MODEL}: {e}"))?;
    if params.num_entities() == 0 || params.num_relations() == 0 {
        return Err("model has no entities or relations".into());
    }
    let probe = TripleIds::new(0, 0, params.num_entities().min(2) - 1);
    let score = params.score(probe).map_err(|e| format!("probe scoring failed: {e}"))?;
    if !score.is_finite() {
        return Err(format!("probe score is {score}"));
    }
    let mut detail = format!("{} instantiated, probe score {score}", cfg.model_name);

    let have_splits = [ENTITY_TO_ID, RELATION_TO_ID, EVALUATION_SUMMARY, TRAIN_TRIPLES, TEST_TRIPLES]
        .iter()
        .all(|n| dir.join(n).is_file());
    if !have_splits {
        detail.push_str("; metric reproduction skipped (bundle files missing)");
        return Ok(detail);
    }
    let entities = read_vocab(dir, ENTITY_TO_ID).map_err(|e| e.to_string())?;
    let relations = read_vocab(dir, RELATION_TO_ID).map_err(|e| e.to_string())?;
    let stored: RankMetrics = read_json(dir, EVALUATION_SUMMARY).map_err(|e| e.to_string())?;
    let train = load_split(dir, TRAIN_TRIPLES, &entities, &relations).map_err(|e| e.to_string())?;
    let test = load_split(dir, TEST_TRIPLES, &entities, &relations).map_err(|e| e.to_string())?;
    let known = known_set([train.as_slice(), test.as_slice()]);
    let again = evaluate(&params, &test, &known, &cfg.eval_ks).map_err(|e| e.to_string())?;
    if again != stored {
        return Err(format!(
            "re-evaluation gives filtered mean rank {}, {EVALUATION_SUMMARY} says {}",
            again.mean_rank_filtered, stored.mean_rank_filtered
        ));
    }
    detail.push_str("; stored metrics reproduced");
    Ok(detail)
}

fn check_layout(dir: &Path, zoo_root: &Path) -> Check {
    let canon = |p: &Path| {
        std::fs::canonicalize(p).map_err(|e| format!("cannot resolve {}: {e}", p.display()))
    };
    let (entry, root) = (canon(dir)?, canon(zoo_root)?);
    let rel = entry
        .strip_prefix(&root)
        .map_err(|_| format!("{} is not inside zoo root {}", entry.display(), root.display()))?;
    let depth = rel.components().count();
    if depth != LAYOUT_DEPTH {
        return Err(format!(
            "entry is {depth} level(s) below the zoo root, expected {LAYOUT_DEPTH} (<domain>/<dataset>/<experiment>)"
        ));
    }
    Ok(format!("{}", rel.display()))
}

/// Checks a zoo entry. Failures are report entries, never errors.
pub fn validate_zoo_entry(dir: &Path, zoo_root: &Path) -> ValidationReport {
    let cfg = read_config(dir).map_err(|e| e.to_string());
    let results = [
        (Requirement::Reference, check_reference(&cfg)),
        (Requirement::Completeness, check_completeness(dir)),
        (Requirement::DatasetUrl, check_dataset_url(&cfg)),
        (Requirement::Readme, check_readme(dir)),
        (Requirement::Instantiation, check_instantiation(dir)),
        (Requirement::Layout, check_layout(dir, zoo_root)),
    ];
    ValidationReport {
        entry: dir.to_path_buf(),
        checks: results
            .into_iter()
            .map(|(requirement, r)| {
                let passed = r.is_ok();
                CheckResult {
                    requirement,
                    passed,
                    detail: r.unwrap_or_else(|e| e),
                }
            })
            .collect(),
    }
}
