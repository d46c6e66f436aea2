use kgforge::hpo::{
    run_trial, select_best, validation_split, HyperparameterOptimizer, SearchOutcome, SearchSpace,
    SelectionMetric,
};
use kgforge::synthetic::grid_kg;
use kgforge::{build_index, ExperimentConfig, IndexedKG, ModelName, Result};

/// Walks a fixed list of learning rates instead of sampling.
struct GridSweep {
    rates: Vec<f64>,
    proposed: Vec<usize>,
}

impl HyperparameterOptimizer for GridSweep {
    fn propose(&mut self, space: &SearchSpace, trial_index: usize) -> Result<ExperimentConfig> {
        self.proposed.push(trial_index);
        let mut c = ExperimentConfig::new(space.model_name[0]);
        c.embedding_dim = space.embedding_dim[0];
        c.num_epochs = space.num_epochs[0];
        c.batch_size = space.batch_size[0];
        c.learning_rate = self.rates[trial_index % self.rates.len()];
        c.seed = trial_index as u64;
        Ok(c)
    }

    fn search(&mut self, kg: &IndexedKG, space: &SearchSpace) -> Result<SearchOutcome> {
        let (sub, val) = validation_split(kg, 0)?;
        let trials = (0..space.trials)
            .map(|i| Ok(run_trial(i, self.propose(space, i)?, &sub, &val)))
            .collect::<Result<Vec<_>>>()?;
        let best_index = select_best(&trials, space.selection_metric)?;
        Ok(SearchOutcome {
            selection_metric: space.selection_metric,
            best_index,
            trials,
            sub_train: sub.triples().to_vec(),
            validation: val.triples().to_vec(),
        })
    }
}

#[test]
fn custom_optimizer_plugs_into_the_interface() {
    let mut base = ExperimentConfig::new(ModelName::DistMult);
    base.embedding_dim = 8;
    base.num_epochs = 5;
    let mut space = SearchSpace::singleton(&base, 3);
    space.selection_metric = SelectionMetric::MeanRankFiltered;
    let kg = build_index(&grid_kg(1)).unwrap();
    let mut opt = GridSweep {
        rates: vec![0.001, 0.01, 0.1],
        proposed: Vec::new(),
    };
    let out = opt.search(&kg, &space).unwrap();
    assert_eq!(opt.proposed, vec![0, 1, 2]);
    let rates: Vec<f64> = out.trials.iter().map(|t| t.config.learning_rate).collect();
    assert_eq!(rates, vec![0.001, 0.01, 0.1]);
    let min = out
        .trials
        .iter()
        .map(|t| t.metrics().unwrap().mean_rank_filtered)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(out.best_value(), min);
}

#[test]
fn single_trial_is_the_best() {
    let mut c = ExperimentConfig::new(ModelName::TransE);
    c.embedding_dim = 4;
    c.num_epochs = 2;
    let space = SearchSpace::singleton(&c, 1);
    let kg = build_index(&grid_kg(2)).unwrap();
    let out = kgforge::random_search(&kg, &space, 5).unwrap();
    assert_eq!(out.trials.len(), 1);
    assert_eq!(out.best_index, 0);
}

#[test]
fn search_space_document_parses() {
    let text = r#"{
        "model_name": ["transe", "transr", "ermlp"],
        "embedding_dim": [8, 16],
        "model_specific": {"relation_dim": [4, 8], "hidden_dim": [16], "p_norm": [1]},
        "learning_rate": [0.01],
        "margin": [1.0, 2.0],
        "num_epochs": [10],
        "batch_size": [16],
        "trials": 5,
        "selection_metric": {"kind": "mean_rank_filtered"},
        "seed": 3
    }"#;
    let space = SearchSpace::from_json(text).unwrap();
    let mut rng = kgforge::rng::stream(0, kgforge::rng::Stream::HpoSampling);
    for _ in 0..100 {
        let c = space.sample(&mut rng);
        c.validate().unwrap();
        assert_eq!(c.model_specific.len(), 1, "{c:?}");
    }
}
