//! `kgforge` command-line front end.
//!
//! Exit status: 0 on success, 1 on a usage error (bad flags, missing input
//! files, invalid configuration documents, aborted wizard), 2 when the work
//! itself fails. Logs go to stderr, filtered by `KGFORGE_LOG`.

mod wizard;

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use kgforge::artifacts::{self, zoo, ExperimentRecord};
use kgforge::config::Device;
use kgforge::evaluation::known_set;
use kgforge::ingest::{self, NetworkClient};
use kgforge::inference;
use kgforge::{ExperimentConfig, SearchSpace, SourceFormat};

#[derive(Debug, Parser)]
#[command(name = "kgforge", version, about = "Train, tune, evaluate and apply knowledge graph embedding models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one configuration and export a bundle.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Triples file; defaults to `metadata.dataset_path` of the config.
        #[arg(long)]
        data: Option<PathBuf>,
        /// tsv, ntriples or cx; defaults to `metadata.dataset_format`, then tsv.
        #[arg(long)]
        format: Option<SourceFormat>,
        #[arg(long)]
        out: PathBuf,
        /// Only cpu is available.
        #[arg(long)]
        device: Option<Device>,
        /// Replace a non-empty output directory.
        #[arg(long)]
        overwrite: bool,
    },
    /// Random search over a space, then retrain the winner and export it.
    Hpo {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        format: Option<SourceFormat>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        device: Option<Device>,
        #[arg(long)]
        overwrite: bool,
    },
    /// Re-evaluate a bundle on a test file.
    Evaluate {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value = "tsv")]
        format: SourceFormat,
        /// Write the metrics JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score and rank every candidate triple over the given labels.
    Infer {
        #[arg(long)]
        bundle: PathBuf,
        /// One entity label per line.
        #[arg(long)]
        entities: PathBuf,
        /// One relation label per line.
        #[arg(long)]
        relations: PathBuf,
        /// TSV triples to leave out of the candidates.
        #[arg(long)]
        exclude: Option<PathBuf>,
        /// Drop candidates whose head equals their tail.
        #[arg(long)]
        no_reflexive: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a configuration file interactively.
    Wizard {
        #[arg(long, default_value = "experiment.json")]
        out: PathBuf,
    },
    /// Check a model zoo entry.
    ZooValidate {
        dir: PathBuf,
        /// Zoo root; defaults to three levels above the entry.
        #[arg(long)]
        root: Option<PathBuf>,
    },
    /// Download a network in CX form.
    Fetch {
        #[arg(long)]
        network: String,
        #[arg(long)]
        endpoint: String,
        #[arg(long)]
        out: PathBuf,
    },
}

/// A failure and the exit status it maps to.
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<kgforge::Error> for Failure {
    fn from(e: kgforge::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(anyhow!(msg.into()))
}

fn require_file(path: &Path, what: &str) -> Outcome {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("{what} file not found: {}", path.display())))
    }
}

fn require_dir(path: &Path, what: &str) -> Outcome {
    if path.is_dir() {
        Ok(())
    } else {
        Err(usage(format!("{what} directory not found: {}", path.display())))
    }
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Picks the data file and format from the flags, falling back to the
/// metadata of the configuration.
fn data_source(
    data: Option<PathBuf>,
    format: Option<SourceFormat>,
    meta: &kgforge::config::ExperimentMetadata,
) -> Result<(PathBuf, SourceFormat), Failure> {
    let path = data
        .or_else(|| meta.dataset_path.as_ref().map(PathBuf::from))
        .ok_or_else(|| usage("no --data given and the configuration names no dataset_path"))?;
    require_file(&path, "data")?;
    let format = format.or(meta.dataset_format).unwrap_or(SourceFormat::Tsv);
    Ok((path, format))
}

fn train(
    config: &Path,
    data: Option<PathBuf>,
    format: Option<SourceFormat>,
    out: &Path,
    overwrite: bool,
) -> Outcome {
    require_file(config, "config")?;
    let cfg = ExperimentConfig::from_json(&read_text(config)?)
        .map_err(|e| usage(format!("{}: {e}", config.display())))?;
    let (data, format) = data_source(data, format, &cfg.metadata)?;
    let triples = ingest::read(&data, format)?;
    log::info!("read {} triples from {}", triples.len(), data.display());
    let run = kgforge::run_experiment(&triples, &cfg)?;
    artifacts::export_experiment(out, &run.record(), overwrite)?;
    log::info!("bundle written to {}", out.display());
    Ok(())
}

fn hpo(
    space: &Path,
    data: Option<PathBuf>,
    format: Option<SourceFormat>,
    out: &Path,
    overwrite: bool,
) -> Outcome {
    require_file(space, "search space")?;
    let space = SearchSpace::from_json(&read_text(space)?)
        .map_err(|e| usage(format!("{}: {e}", space.display())))?;
    let (data, format) = data_source(data, format, &space.metadata)?;
    let triples = ingest::read(&data, format)?;
    let (run, outcome) = kgforge::run_hpo(&triples, &space)?;
    log::info!(
        "best trial {} of {} ({} = {})",
        outcome.best_index,
        outcome.trials.len(),
        outcome.selection_metric,
        outcome.best_value()
    );
    let record = ExperimentRecord {
        trials: Some(&outcome.trials),
        ..run.record()
    };
    artifacts::export_experiment(out, &record, overwrite)?;
    Ok(())
}

fn evaluate(bundle: &Path, test: &Path, format: SourceFormat, out: Option<&Path>) -> Outcome {
    require_dir(bundle, "bundle")?;
    require_file(test, "test")?;
    let exp = kgforge::load_experiment::<f64>(bundle)?;
    let kg = exp.index(Vec::new())?;
    let test_ids = ingest::read(test, format)?
        .iter()
        .map(|t| kg.encode(t))
        .collect::<kgforge::Result<Vec<_>>>()?;
    // every triple the bundle knows about counts as known
    let mut parts = vec![test_ids.clone()];
    for name in [artifacts::TRAIN_TRIPLES, artifacts::TEST_TRIPLES] {
        if bundle.join(name).is_file() {
            parts.push(artifacts::load_split(bundle, name, &exp.entities, &exp.relations)?);
        }
    }
    let known = known_set(parts.iter().map(Vec::as_slice));
    let metrics = kgforge::evaluate(&exp.params, &test_ids, &known, &exp.config.eval_ks)?;
    let json = kgforge::config::canonical_json(&metrics)?;
    match out {
        Some(p) => kgforge::fsutil::write_atomic(p, json.as_bytes())?,
        None => std::io::stdout()
            .write_all(json.as_bytes())
            .context("writing to stdout")?,
    }
    Ok(())
}

fn infer(
    bundle: &Path,
    entities: &Path,
    relations: &Path,
    exclude: Option<&Path>,
    no_reflexive: bool,
    out: &Path,
) -> Outcome {
    require_dir(bundle, "bundle")?;
    require_file(entities, "entities")?;
    require_file(relations, "relations")?;
    if let Some(p) = exclude {
        require_file(p, "exclude")?;
    }
    let exp = kgforge::load_experiment::<f64>(bundle)?;
    let ents = inference::resolve_labels(&exp.entities, &inference::read_labels(entities)?, "entity")?;
    let rels = inference::resolve_labels(&exp.relations, &inference::read_labels(relations)?, "relation")?;
    let kg = exp.index(Vec::new())?;
    let mut skip = HashSet::new();
    if let Some(p) = exclude {
        for t in ingest::read_tsv(p)? {
            // a triple with labels outside the bundle can never be a candidate
            if let Ok(ids) = kg.encode(&t) {
                skip.insert(ids);
            }
        }
    }
    let candidates = inference::enumerate_candidates(&ents, &rels, &skip, no_reflexive);
    log::info!("ranking {} candidate triples", candidates.len());
    let ranked = inference::rank_candidates(&exp.params, &candidates)?;
    let labelled = inference::decode_ranked(&exp.entities, &exp.relations, &ranked)?;
    inference::write_predictions(out, &labelled)?;
    Ok(())
}

fn wizard(out: &Path) -> Outcome {
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let result = wizard::Wizard::new(stdin.lock(), stdout.lock()).run();
    let outcome = match result {
        Ok(o) => o,
        Err(wizard::Aborted::EndOfInput) => return Err(usage("input ended before the wizard finished; nothing written")),
        Err(wizard::Aborted::Io(e)) => return Err(Failure::Runtime(e.into())),
    };
    let json = outcome.to_json()?;
    println!("{json}");
    kgforge::fsutil::write_atomic(out, json.as_bytes())?;
    println!("configuration written to {}", out.display());
    Ok(())
}

fn zoo_validate(dir: &Path, root: Option<PathBuf>) -> Outcome {
    require_dir(dir, "zoo entry")?;
    let root = match root {
        Some(r) => r,
        None => dir
            .ancestors()
            .nth(zoo::LAYOUT_DEPTH)
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    let report = zoo::validate_zoo_entry(dir, &root);
    println!("{report}");
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Runtime(anyhow!("{} requirement(s) failed", report.failures().len())))
    }
}

fn fetch(network: &str, endpoint: &str, out: &Path) -> Outcome {
    let client = NetworkClient::new(endpoint).map_err(|e| usage(e.to_string()))?;
    let body = client.fetch(network).map_err(kgforge::Error::from)?;
    // refuse to store something the CX reader cannot read
    let text = std::str::from_utf8(&body).context("response is not UTF-8")?;
    let triples = ingest::parse_cx(text)?;
    log::info!("network {network}: {} triples", triples.len());
    kgforge::fsutil::write_atomic(out, &body)?;
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Train {
            config,
            data,
            format,
            out,
            device: _,
            overwrite,
        } => train(&config, data, format, &out, overwrite),
        Command::Hpo {
            space,
            data,
            format,
            out,
            device: _,
            overwrite,
        } => hpo(&space, data, format, &out, overwrite),
        Command::Evaluate {
            bundle,
            test,
            format,
            out,
        } => evaluate(&bundle, &test, format, out.as_deref()),
        Command::Infer {
            bundle,
            entities,
            relations,
            exclude,
            no_reflexive,
            out,
        } => infer(&bundle, &entities, &relations, exclude.as_deref(), no_reflexive, &out),
        Command::Wizard { out } => wizard(&out),
        Command::ZooValidate { dir, root } => zoo_validate(&dir, root),
        Command::Fetch {
            network,
            endpoint,
            out,
        } => fetch(&network, &endpoint, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("KGFORGE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            eprintln!("run `kgforge --help` for usage");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
