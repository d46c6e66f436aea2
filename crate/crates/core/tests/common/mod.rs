#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use kgforge::evaluation::{known_set, RankEntry, Side};
use kgforge::models::{init_params_with, Family, InitOptions, LossFn, Matrix, ModelParams, Norm};
use kgforge::rng::ChaCha8Rng;
use kgforge::synthetic::grid_kg;
use kgforge::*;
use rand::{Rng, SeedableRng};

pub const ENTITIES: usize = 5;
pub const RELATIONS: usize = 3;
pub const DIM: usize = 4;
pub const EPS: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;

/// Every model, with both norms where the model has a norm choice.
pub fn gradient_specs() -> Vec<(String, ModelSpec)> {
    let mut out = Vec::new();
    for name in ModelName::ALL {
        let norms: &[Norm] = match name {
            ModelName::TransE | ModelName::Se => &[Norm::L1, Norm::L2],
            _ => &[Norm::L2],
        };
        for &norm in norms {
            // a relation width different from the entity width exercises
            // the rectangular TransR/TransD projections
            let spec = ModelSpec::new(name, DIM, 3, 5, norm);
            out.push((format!("{name}/{norm:?}"), spec));
        }
    }
    out
}

/// Seeded parameters with every entry drawn from `U[-0.6, 0.6]`.
///
/// The moderate scale keeps scores O(1): with large scores the sigmoid in
/// BCE saturates, true gradients shrink below 1e-7 and central differences
/// at ε = 1e-5 can no longer resolve them to 1e-4 relative accuracy.
pub fn random_params(spec: ModelSpec, seed: u64) -> ModelParams<f64> {
    let mut p = init_params_with::<f64>(spec, ENTITIES, RELATIONS, seed, InitOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let families: Vec<Family> = p.tensors().map(|(f, _)| f).collect();
    for f in families {
        for x in p.tensor_mut(f).unwrap().as_mut_slice() {
            *x = rng.random_range(-0.6..0.6);
        }
    }
    p
}

pub fn random_pair(rng: &mut ChaCha8Rng) -> (TripleIds, TripleIds) {
    let pos = TripleIds::new(
        rng.random_range(0..ENTITIES),
        rng.random_range(0..RELATIONS),
        rng.random_range(0..ENTITIES),
    );
    loop {
        let e = rng.random_range(0..ENTITIES);
        let neg = if rng.random_bool(0.5) {
            TripleIds { head: e, ..pos }
        } else {
            TripleIds { tail: e, ..pos }
        };
        if neg != pos {
            return (pos, neg);
        }
    }
}

#[derive(Debug)]
pub enum FdOutcome {
    /// Largest elementwise relative error seen.
    Checked(f64),
    /// A one-sided difference disagreed: the point sits on a kink.
    Kink,
}

/// Compares the analytic pair-loss gradient with central differences on
/// every parameter entry.
pub fn fd_check(p: &ModelParams<f64>, pos: TripleIds, neg: TripleIds, loss: LossFn<f64>) -> FdOutcome {
    let grad = p.grad_loss(pos, neg, loss).unwrap();
    let f0 = p.pair_loss(pos, neg, loss).unwrap();
    let mut worst = 0.0f64;
    let mut q = p.clone();
    let families: Vec<(Family, usize)> = p.tensors().map(|(f, m)| (f, m.cols())).collect();
    for (family, cols) in families {
        let n = p.tensor(family).unwrap().as_slice().len();
        for idx in 0..n {
            let (row, col) = (idx / cols, idx % cols);
            let orig = p.tensor(family).unwrap().as_slice()[idx];
            let mut eval = |x: f64| {
                q.tensor_mut(family).unwrap().as_mut_slice()[idx] = x;
                let l = q.pair_loss(pos, neg, loss).unwrap();
                q.tensor_mut(family).unwrap().as_mut_slice()[idx] = orig;
                l
            };
            let (fp, fm) = (eval(orig + EPS), eval(orig - EPS));
            let numeric = (fp - fm) / (2.0 * EPS);
            let (fwd, bwd) = ((fp - f0) / EPS, (f0 - fm) / EPS);
            if (fwd - bwd).abs() > 1e-3 * numeric.abs().max(1.0) {
                return FdOutcome::Kink;
            }
            let analytic = grad.get(family, row).map_or(0.0, |r| r[col]);
            let denom = analytic.abs().max(numeric.abs());
            let rel = if denom < 1e-9 { 0.0 } else { (analytic - numeric).abs() / denom };
            if rel.is_nan() {
                return FdOutcome::Checked(f64::INFINITY);
            }
            worst = worst.max(rel);
        }
    }
    FdOutcome::Checked(worst)
}

/// Margin chosen so the hinge is active with slack 1 at the test point.
pub fn active_margin(p: &ModelParams<f64>, pos: TripleIds, neg: TripleIds) -> LossFn<f64> {
    let m = p.score(pos).unwrap() - p.score(neg).unwrap() + 1.0;
    LossFn::MarginRanking { margin: m }
}

/// Runs the gradient check for `seeds` seeds on one spec and both losses.
/// Returns the worst relative error, or an error message.
pub fn gradient_check_spec(spec: ModelSpec, seeds: u64) -> std::result::Result<f64, String> {
    let mut worst = 0.0f64;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut accepted = 0;
        let mut attempts = 0;
        while accepted < 2 {
            attempts += 1;
            if attempts > 50 {
                return Err(format!("seed {seed}: no kink-free sample in 50 draws"));
            }
            let p = random_params(spec, seed * 1000 + attempts);
            let (pos, neg) = random_pair(&mut rng);
            let loss = if accepted == 0 {
                active_margin(&p, pos, neg)
            } else {
                LossFn::BinaryCrossEntropy
            };
            match fd_check(&p, pos, neg, loss) {
                FdOutcome::Kink => continue,
                FdOutcome::Checked(r) => {
                    if r >= REL_TOL {
                        return Err(format!("seed {seed} {loss:?}: relative error {r:e}"));
                    }
                    worst = worst.max(r);
                    accepted += 1;
                }
            }
        }
    }
    Ok(worst)
}

/// A random KG over at most `max_entities` entities.
pub fn random_kg(rng: &mut ChaCha8Rng, max_entities: usize) -> IndexedKG {
    let ne = rng.random_range(3..=max_entities);
    let nr = rng.random_range(1..=3);
    let n = rng.random_range(6..=3 * ne);
    let triples: Vec<Triple> = (0..n)
        .map(|_| {
            Triple::new(
                format!("e{}", rng.random_range(0..ne)),
                format!("r{}", rng.random_range(0..nr)),
                format!("e{}", rng.random_range(0..ne)),
            )
            .unwrap()
        })
        .collect();
    build_index(&triples).unwrap()
}

/// Rounds every parameter to a coarse grid so many scores tie exactly.
pub fn quantize(p: &mut ModelParams<f64>) {
    let families: Vec<Family> = p.tensors().map(|(f, _)| f).collect();
    for f in families {
        for x in p.tensor_mut(f).unwrap().as_mut_slice() {
            *x = (*x * 2.0).round() / 2.0;
        }
    }
}

/// Exhaustive reference ranking: score every candidate one by one, sort by
/// score, and average the 1-based positions of everything tied with the
/// true triple.
pub fn oracle_rank(p: &ModelParams<f64>, t: TripleIds, side: Side, filter: Option<&HashSet<TripleIds>>) -> f64 {
    let mut scored: Vec<(f64, TripleIds)> = (0..p.num_entities())
        .map(|e| match side {
            Side::Head => TripleIds { head: e, ..t },
            Side::Tail => TripleIds { tail: e, ..t },
        })
        .filter(|c| *c == t || filter.is_none_or(|f| !f.contains(c)))
        .map(|c| (p.score(c).unwrap(), c))
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let target = p.score(t).unwrap();
    let positions: Vec<usize> = scored
        .iter()
        .enumerate()
        .filter(|(_, (s, _))| *s == target)
        .map(|(i, _)| i + 1)
        .collect();
    positions.iter().sum::<usize>() as f64 / positions.len() as f64
}

pub fn oracle_entries(p: &ModelParams<f64>, test: &[TripleIds], known: &HashSet<TripleIds>) -> Vec<RankEntry> {
    let mut out = Vec::new();
    for &t in test {
        for side in [Side::Head, Side::Tail] {
            out.push(RankEntry {
                triple: t,
                side,
                raw_rank: oracle_rank(p, t, side, None),
                filtered_rank: oracle_rank(p, t, side, Some(known)),
            });
        }
    }
    out
}

/// Compares `evaluate` against the oracle on one random KG; returns the
/// metrics for further checks.
pub fn oracle_case(seed: u64) -> std::result::Result<RankMetrics, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kg = random_kg(&mut rng, 20);
    let name = ModelName::ALL[rng.random_range(0..ModelName::ALL.len())];
    let spec = ModelSpec::new(name, 3, 2, 3, if rng.random_bool(0.5) { Norm::L1 } else { Norm::L2 });
    let mut p = init_params_with::<f64>(spec, kg.num_entities(), kg.num_relations(), seed, InitOptions::default())
        .map_err(|e| e.to_string())?;
    if seed.is_multiple_of(2) {
        quantize(&mut p);
    }
    // every third triple is a test triple; all triples are known
    let test: Vec<TripleIds> = kg.triples().iter().copied().step_by(3).collect();
    let known = known_set([kg.triples()]);
    let ks = [1, 3, 10];
    let got = evaluate(&p, &test, &known, &ks).map_err(|e| e.to_string())?;
    let want = RankMetrics::from_entries(oracle_entries(&p, &test, &known), &ks).unwrap();
    if got != want {
        let diff = got
            .per_triple_ranks
            .iter()
            .zip(&want.per_triple_ranks)
            .find(|(a, b)| a != b)
            .map(|(a, b)| format!("{a:?} vs oracle {b:?}"))
            .unwrap_or_else(|| "aggregates differ".into());
        return Err(format!("seed {seed} ({name}): {diff}"));
    }
    Ok(got)
}

/// Number of entries with filtered rank above raw rank.
pub fn dominance_violations(m: &RankMetrics) -> usize {
    let per = m.per_triple_ranks.iter().filter(|e| e.filtered_rank > e.raw_rank).count();
    per + usize::from(m.mean_rank_filtered > m.mean_rank_raw)
}

/// Benchmark configuration for the synthetic grid graph.
pub fn grid_config() -> ExperimentConfig {
    let mut c = ExperimentConfig::new(ModelName::TransE);
    c.embedding_dim = 16;
    c.learning_rate = 0.01;
    c.margin = 1.0;
    c.num_epochs = 200;
    c.batch_size = 8;
    c.split_ratio = 0.8;
    c.seed = 0;
    c.eval_ks = vec![1, 3, 10];
    c
}

pub fn grid_triples() -> Vec<Triple> {
    grid_kg(0)
}

/// Path → bytes of every file under `dir`.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Small trained experiment used by the bundle tests.
pub fn small_run(seed: u64) -> ExperimentRun {
    let mut c = grid_config();
    c.num_epochs = 20;
    c.embedding_dim = 8;
    c.seed = seed;
    c.metadata.reference = Some("Doe et al., A study of grids (2020)".into());
    c.metadata.dataset_url = Some("https://example.org/datasets/grid.tsv".into());
    run_experiment(&grid_kg(seed), &c).unwrap()
}

/// Exports `run` as `<root>/<domain>/<dataset>/<name>` with a README.
pub fn zoo_entry(root: &Path, run: &ExperimentRun) -> std::path::PathBuf {
    let dir = root.join("biology").join("grid").join("transe_small");
    artifacts::export_experiment(&dir, &run.record(), false).unwrap();
    std::fs::write(dir.join("README.md"), "# TransE on the grid graph\n\nSmall demo entry.\n").unwrap();
    dir
}

pub fn matrix_bits(m: &Matrix<f64>) -> Vec<u64> {
    m.as_slice().iter().map(|x| x.to_bits()).collect()
}

/// Copies a flat directory.
pub fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for e in std::fs::read_dir(from).unwrap() {
        let p = e.unwrap().path();
        std::fs::copy(&p, to.join(p.file_name().unwrap())).unwrap();
    }
}

pub fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub const FIXTURE_ENDPOINT: &str = "https://commons.example.org/v2";
