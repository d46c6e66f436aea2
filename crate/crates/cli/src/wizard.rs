//! Interactive configuration wizard.
//!
//! Reads answers line by line from any `BufRead`, so a script can drive it
//! as well as a terminal. Every answer is checked on the spot; a bad one is
//! reported together with an example of a valid value and asked again. An
//! empty answer takes the default shown in brackets.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use kgforge::config::{HIDDEN_DIM, P_NORM, RELATION_DIM};
use kgforge::{ExperimentConfig, LossKind, ModelName, SearchSpace, SourceFormat};

/// Why a session ended without a result.
#[derive(Debug)]
pub enum Aborted {
    EndOfInput,
    Io(std::io::Error),
}

impl From<std::io::Error> for Aborted {
    fn from(e: std::io::Error) -> Self {
        Aborted::Io(e)
    }
}

/// What a finished session produced.
#[derive(Debug)]
pub enum Outcome {
    Training(ExperimentConfig),
    Hpo(SearchSpace),
}

impl Outcome {
    pub fn to_json(&self) -> kgforge::Result<String> {
        match self {
            Outcome::Training(c) => c.to_canonical_json(),
            Outcome::Hpo(s) => kgforge::config::canonical_json(s),
        }
    }
}

type Answer<T> = Result<T, String>;

pub struct Wizard<R, W> {
    input: R,
    output: W,
}

impl<R: BufRead, W: Write> Wizard<R, W> {
    pub fn new(input: R, output: W) -> Self {
        Wizard { input, output }
    }

    /// Asks until `parse` accepts the answer.
    fn ask<T>(
        &mut self,
        question: &str,
        default: Option<&str>,
        example: &str,
        parse: impl Fn(&str) -> Answer<T>,
    ) -> Result<T, Aborted> {
        loop {
            match default {
                Some(d) => write!(self.output, "{question} [{d}]: ")?,
                None => write!(self.output, "{question}: ")?,
            }
            self.output.flush()?;
            let mut line = String::new();
            if self.input.read_line(&mut line)? == 0 {
                writeln!(self.output)?;
                return Err(Aborted::EndOfInput);
            }
            let answer = match (line.trim(), default) {
                ("", Some(d)) => d.to_string(),
                (a, _) => a.to_string(),
            };
            match parse(&answer) {
                Ok(v) => return Ok(v),
                Err(why) => writeln!(self.output, "  invalid input {answer:?}: {why} (e.g. {example})")?,
            }
        }
    }

    pub fn run(&mut self) -> Result<Outcome, Aborted> {
        writeln!(self.output, "kgforge configuration wizard (empty answer = default)")?;
        let hpo = self.ask("Mode (training or hpo)", Some("training"), "training", |s| {
            match s.to_ascii_lowercase().as_str() {
                "training" | "train" => Ok(false),
                "hpo" => Ok(true),
                _ => Err("choose training or hpo".into()),
            }
        })?;
        let data: String = self.ask("Path to the knowledge graph file", None, "data/kg.tsv", |s| {
            if Path::new(s).is_file() {
                Ok(s.to_string())
            } else {
                Err("no such file".into())
            }
        })?;
        let guess = guess_format(&data);
        let format: SourceFormat = self.ask(
            "File format (tsv, ntriples, cx)",
            Some(guess.as_str()),
            "tsv",
            parse_via,
        )?;
        let metadata = kgforge::config::ExperimentMetadata {
            dataset_path: Some(data),
            dataset_format: Some(format),
            ..Default::default()
        };
        let names = ModelName::ALL.map(ModelName::as_str).join(", ");
        if hpo {
            self.hpo_session(metadata, &names).map(Outcome::Hpo)
        } else {
            self.training_session(metadata, &names).map(Outcome::Training)
        }
    }

    fn training_session(
        &mut self,
        metadata: kgforge::config::ExperimentMetadata,
        names: &str,
    ) -> Result<ExperimentConfig, Aborted> {
        let model: ModelName = self.ask(&format!("Model ({names})"), Some("transe"), "transe", parse_via)?;
        let mut c = ExperimentConfig::new(model);
        c.metadata = metadata;
        c.embedding_dim = self.ask("Embedding dimension", Some("50"), "50", positive)?;
        c.model_specific = self.model_specific(model, c.embedding_dim)?;
        c.learning_rate = self.ask("Learning rate", Some("0.01"), "0.01", positive_f64)?;
        c.loss = self.ask(
            "Loss (margin_ranking or binary_cross_entropy)",
            Some(&model.default_loss().to_string()),
            "margin_ranking",
            parse_via,
        )?;
        if c.loss == LossKind::MarginRanking {
            c.margin = self.ask("Margin", Some("1"), "1.0", non_negative_f64)?;
        }
        c.num_epochs = self.ask("Number of epochs", Some("100"), "100", positive)?;
        c.batch_size = self.ask("Batch size", Some("32"), "32", positive)?;
        c.split_ratio = self.ask("Training split ratio", Some("0.8"), "0.8", ratio)?;
        c.seed = self.ask("Random seed", Some("0"), "42", parse_via)?;
        Ok(c)
    }

    fn model_specific(&mut self, model: ModelName, d: usize) -> Result<BTreeMap<String, usize>, Aborted> {
        let mut out = BTreeMap::new();
        for &key in model.model_specific_keys() {
            let value = match key {
                RELATION_DIM => self.ask("Relation dimension", Some(&d.to_string()), "32", positive)?,
                HIDDEN_DIM => self.ask("Hidden layer size", Some(&d.to_string()), "64", positive)?,
                P_NORM => self.ask("Distance norm (1 or 2)", Some("2"), "1", |s| match s {
                    "1" => Ok(1),
                    "2" => Ok(2),
                    _ => Err("the norm must be 1 or 2".into()),
                })?,
                _ => continue,
            };
            out.insert(key.to_string(), value);
        }
        Ok(out)
    }

    fn hpo_session(
        &mut self,
        metadata: kgforge::config::ExperimentMetadata,
        names: &str,
    ) -> Result<SearchSpace, Aborted> {
        let models: Vec<ModelName> = self.ask(
            &format!("Models to search, comma separated ({names})"),
            Some("transe"),
            "transe, distmult",
            |s| list(s, parse_via),
        )?;
        let mut base = ExperimentConfig::new(models[0]);
        base.metadata = metadata;
        let mut space = SearchSpace::singleton(&base, 1);
        space.model_name = models;
        space.loss = None;
        space.embedding_dim = self.ask("Embedding dimensions", Some("50"), "32, 64", |s| list(s, positive))?;
        space.learning_rate = self.ask("Learning rates", Some("0.01"), "0.001, 0.01", |s| {
            list(s, positive_f64)
        })?;
        space.margin = self.ask("Margins", Some("1"), "0.5, 1, 2", |s| list(s, non_negative_f64))?;
        space.num_epochs = self.ask("Numbers of epochs", Some("100"), "50, 100", |s| list(s, positive))?;
        space.batch_size = self.ask("Batch sizes", Some("32"), "32, 128", |s| list(s, positive))?;
        space.trials = self.ask("Number of trials", Some("10"), "20", positive)?;
        space.selection_metric = self.ask("Selection metric (hits@K or mr)", Some("hits@10"), "hits@10", parse_via)?;
        space.split_ratio = self.ask("Training split ratio", Some("0.8"), "0.8", ratio)?;
        space.seed = self.ask("Random seed", Some("0"), "42", parse_via)?;
        Ok(space)
    }
}

fn guess_format(path: &str) -> SourceFormat {
    match Path::new(path).extension().and_then(|e| e.to_str()) {
        Some("nt") => SourceFormat::NTriples,
        Some("cx") | Some("json") => SourceFormat::Cx,
        _ => SourceFormat::Tsv,
    }
}

fn parse_via<T: FromStr>(s: &str) -> Answer<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

fn positive(s: &str) -> Answer<usize> {
    match s.parse::<i64>() {
        Ok(v) if v > 0 => Ok(v as usize),
        _ => Err("must be a positive integer".into()),
    }
}

fn positive_f64(s: &str) -> Answer<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err("must be a positive number".into()),
    }
}

fn non_negative_f64(s: &str) -> Answer<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err("must be a non-negative number".into()),
    }
}

fn ratio(s: &str) -> Answer<f64> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(v),
        _ => Err("must lie strictly between 0 and 1".into()),
    }
}

fn list<T>(s: &str, item: impl Fn(&str) -> Answer<T>) -> Answer<Vec<T>> {
    let v = s
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(&item)
        .collect::<Answer<Vec<T>>>()?;
    if v.is_empty() {
        return Err("give at least one value".into());
    }
    Ok(v)
}
