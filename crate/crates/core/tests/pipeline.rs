use boolens::app::demo_spec;
use boolens::config::RunConfig;
use boolens::expr::parse;
use boolens::ingest::{ingest_corpus, CorpusInputs, DisambiguationPolicy};
use boolens::model::GroupFilter;
use boolens::search::{grid_search, PreparedMasks, SearchConfig, SearchMode};
use boolens::synth::{generate, SourceSpec, SynthSpec};
use proptest::prelude::*;

fn small(seed: u64) -> SynthSpec {
    SynthSpec { n_docs: 30, doc_length: 800, ..demo_spec(seed) }
}

#[test]
fn ingest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate(&small(9)).unwrap();
    let files = corpus.write(dir.path()).unwrap();
    let inputs = CorpusInputs {
        manifest: files.manifest.clone(),
        gold: files.gold.clone(),
        gold_source: "gold".into(),
        systems: files.systems.clone().into_iter().collect(),
        semgroups: files.semgroups.clone(),
        overrides: None,
    };
    let policy = DisambiguationPolicy::new(4);
    let ingested = ingest_corpus(&inputs, &policy).unwrap();
    assert_eq!(ingested.store, corpus.to_store(&policy).unwrap());
    assert!(ingested.dropped.values().all(|&n| n == 0));
}

#[test]
fn budget_covering_space_is_exhaustive() {
    let store = generate(&small(2)).unwrap().to_store(&DisambiguationPolicy::new(0)).unwrap();
    let mut cfg = SearchConfig::new(["A", "B", "C", "D"]);
    let exhaustive = grid_search(&store, "gold", &cfg).unwrap();
    cfg.mode = SearchMode::Sampled;
    cfg.budget = 10_000;
    let sampled = grid_search(&store, "gold", &cfg).unwrap();
    assert_eq!(exhaustive, sampled);
    assert_eq!(exhaustive.evaluated as u128, exhaustive.space_size);
}

#[test]
fn sampled_search_respects_budget_and_seed() {
    let store = generate(&small(2)).unwrap().to_store(&DisambiguationPolicy::new(0)).unwrap();
    let mut cfg = SearchConfig::new(["A", "B", "C", "D", "E"]);
    cfg.mode = SearchMode::Sampled;
    cfg.budget = 100;
    cfg.seed = 17;
    let a = grid_search(&store, "gold", &cfg).unwrap();
    assert_eq!(a.evaluated, 100);
    assert_eq!(a, grid_search(&store, "gold", &cfg).unwrap());
    // singles are always scored
    assert_eq!(a.singles.len(), 5);
}

#[test]
fn config_written_by_synth_loads() {
    let dir = tempfile::tempdir().unwrap();
    let code = boolens::app::main(["boolens", "synth", "--seed", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    let cfg = RunConfig::load(&dir.path().join("config.toml")).unwrap();
    assert_eq!(cfg.seed, Some(1));
    assert_eq!(cfg.systems.len(), 5);
    cfg.corpus_inputs().unwrap();
}

fn recall_at(miss: f64, seed: u64) -> f64 {
    let mut a = SourceSpec::named("A");
    a.miss_rate = miss;
    let spec = SynthSpec { n_docs: 40, doc_length: 1000, sources: vec![a], seed, ..Default::default() };
    let store = generate(&spec).unwrap().to_store(&DisambiguationPolicy::new(0)).unwrap();
    let p = PreparedMasks::new(&store, "gold", &["A"], &GroupFilter::All).unwrap();
    p.score(&parse("A").unwrap()).unwrap().recall
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn recall_falls_with_miss_rate(seed in any::<u64>()) {
        let r: Vec<f64> = [0.0, 0.3, 0.6, 0.9].iter().map(|&m| recall_at(m, seed)).collect();
        prop_assert!(r.windows(2).all(|w| w[1] <= w[0]), "{:?}", r);
        prop_assert_eq!(r[0], 1.0);
    }
}
