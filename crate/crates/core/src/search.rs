//! Ensemble grid search, baselines, and merged evaluations.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{enumerate_ensembles, semantic_space_size, EnsembleSampler, EnumerationMode, ExprTree, Op};
use crate::metrics::{char_prf, doc_level_cui_prf, mention_level_cui_prf, CuiMetricsResult, MetricsResult};
use crate::model::{AnnotationStore, Cui, GroupFilter};
use crate::seed;
use crate::span::{merge_cui_layers, CorpusLayout, CorpusMask, CuiMask, SetAlgebra};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    #[default]
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub sources: Vec<String>,
    pub group: GroupFilter,
    pub min_size: usize,
    pub max_size: usize,
    pub mode: SearchMode,
    pub budget: usize,
    pub seed: u64,
    pub top_k: usize,
    /// Count an ensemble as beating the singles on F1 alone.
    pub relax_f1_only: bool,
}

impl SearchConfig {
    pub fn new<S: Into<String>>(sources: impl IntoIterator<Item = S>) -> Self {
        let sources: Vec<String> = sources.into_iter().map(Into::into).collect();
        SearchConfig {
            max_size: sources.len(),
            sources,
            group: GroupFilter::All,
            min_size: 1,
            mode: SearchMode::Exhaustive,
            budget: 1000,
            seed: 0,
            top_k: 5,
            relax_f1_only: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.top_k == 0 {
            return Err(Error::config("top_k must be at least 1"));
        }
        if self.mode == SearchMode::Sampled && self.budget == 0 {
            return Err(Error::config("sample budget must be at least 1"));
        }
        if self.sources.is_empty() {
            return Err(Error::config("no sources to search over"));
        }
        if self.min_size == 0 || self.min_size > self.max_size {
            return Err(Error::config(format!(
                "ensemble size range {}..={} is empty",
                self.min_size, self.max_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredEnsemble {
    pub expression: String,
    pub size: usize,
    pub metrics: MetricsResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub corpus: String,
    pub group: String,
    pub space_size: u128,
    pub evaluated: usize,
    pub top_f1: Vec<ScoredEnsemble>,
    pub top_precision: Vec<ScoredEnsemble>,
    pub top_recall: Vec<ScoredEnsemble>,
    pub pareto: Vec<ScoredEnsemble>,
    pub singles: Vec<ScoredEnsemble>,
    pub beating_all_singles: Vec<ScoredEnsemble>,
}

/// Exact rational `num/den`, with `0/0` read as zero.
#[derive(Clone, Copy)]
struct Ratio(u64, u64);

impl Ratio {
    fn cmp(self, other: Ratio) -> Ordering {
        let (a, b) = (self.norm(), other.norm());
        (a.0 as u128 * b.1 as u128).cmp(&(b.0 as u128 * a.1 as u128))
    }

    fn norm(self) -> (u64, u64) {
        if self.1 == 0 {
            (0, 1)
        } else {
            (self.0, self.1)
        }
    }
}

fn p_of(m: &MetricsResult) -> Ratio {
    Ratio(m.tp, m.tp + m.fp)
}

fn r_of(m: &MetricsResult) -> Ratio {
    Ratio(m.tp, m.tp + m.fn_)
}

fn f_of(m: &MetricsResult) -> Ratio {
    Ratio(2 * m.tp, 2 * m.tp + m.fp + m.fn_)
}

fn by_f1(a: &ScoredEnsemble, b: &ScoredEnsemble) -> Ordering {
    let (x, y) = (&a.metrics, &b.metrics);
    f_of(y)
        .cmp(f_of(x))
        .then(p_of(y).cmp(p_of(x)))
        .then(r_of(y).cmp(r_of(x)))
        .then_with(|| a.expression.cmp(&b.expression))
}

fn by_precision(a: &ScoredEnsemble, b: &ScoredEnsemble) -> Ordering {
    let (x, y) = (&a.metrics, &b.metrics);
    p_of(y)
        .cmp(p_of(x))
        .then(r_of(y).cmp(r_of(x)))
        .then_with(|| a.expression.cmp(&b.expression))
}

fn by_recall(a: &ScoredEnsemble, b: &ScoredEnsemble) -> Ordering {
    let (x, y) = (&a.metrics, &b.metrics);
    r_of(y)
        .cmp(r_of(x))
        .then(p_of(y).cmp(p_of(x)))
        .then_with(|| a.expression.cmp(&b.expression))
}

fn top(all: &[ScoredEnsemble], k: usize, cmp: fn(&ScoredEnsemble, &ScoredEnsemble) -> Ordering) -> Vec<ScoredEnsemble> {
    let mut v = all.to_vec();
    v.sort_by(cmp);
    v.truncate(k);
    v
}

/// Non-dominated entries in (precision, recall), ordered by precision
/// descending.
pub fn pareto_front(all: &[ScoredEnsemble]) -> Vec<ScoredEnsemble> {
    let mut v = all.to_vec();
    v.sort_by(by_precision);
    let mut out = Vec::new();
    let mut best_r_above: Option<Ratio> = None;
    let mut i = 0;
    while i < v.len() {
        let p = p_of(&v[i].metrics);
        let mut j = i;
        while j < v.len() && p_of(&v[j].metrics).cmp(p) == Ordering::Equal {
            j += 1;
        }
        // v[i] has the highest recall of its precision tier
        let group_r = r_of(&v[i].metrics);
        let clears = best_r_above.is_none_or(|b| group_r.cmp(b) == Ordering::Greater);
        if clears {
            out.extend(
                v[i..j]
                    .iter()
                    .filter(|e| r_of(&e.metrics).cmp(group_r) == Ordering::Equal)
                    .cloned(),
            );
            best_r_above = Some(group_r);
        }
        i = j;
    }
    out
}

/// Gold plus per-source masks for one group filter, ready for repeated
/// expression evaluation.
pub struct PreparedMasks {
    pub layout: Arc<CorpusLayout>,
    pub gold: CorpusMask,
    pub sources: BTreeMap<String, CorpusMask>,
}

impl PreparedMasks {
    pub fn new<S: AsRef<str>>(
        store: &AnnotationStore,
        gold_source: &str,
        sources: &[S],
        group: &GroupFilter,
    ) -> Result<Self> {
        store.check_filter(group)?;
        check_sources(store, gold_source, sources)?;
        let layout = CorpusLayout::from_store(store);
        let gold = CorpusMask::from_source(&layout, store, gold_source, group);
        let sources = sources
            .iter()
            .map(|s| {
                let s = s.as_ref();
                (s.to_string(), CorpusMask::from_source(&layout, store, s, group))
            })
            .collect();
        Ok(PreparedMasks { layout, gold, sources })
    }

    pub fn evaluate(&self, tree: &ExprTree) -> Result<CorpusMask> {
        tree.evaluate(&|s| self.sources.get(s))
    }

    pub fn score(&self, tree: &ExprTree) -> Result<MetricsResult> {
        char_prf(&self.gold, &self.evaluate(tree)?)
    }
}

fn check_sources<S: AsRef<str>>(store: &AnnotationStore, gold_source: &str, sources: &[S]) -> Result<()> {
    if !store.has_source(gold_source) {
        return Err(Error::config(format!("gold source {gold_source:?} not in store")));
    }
    let missing: Vec<&str> = sources
        .iter()
        .map(AsRef::as_ref)
        .filter(|s| !store.has_source(s))
        .collect();
    if !missing.is_empty() {
        return Err(Error::config(format!("unknown sources: {}", missing.join(", "))));
    }
    Ok(())
}

fn candidates(config: &SearchConfig, n: usize, space: u128) -> Result<Vec<ExprTree>> {
    let max = config.max_size.min(n);
    if config.mode == SearchMode::Exhaustive || config.budget as u128 >= space {
        return enumerate_ensembles(&config.sources, config.min_size, max, EnumerationMode::Semantic);
    }
    let sampler = EnsembleSampler::new(&config.sources)?;
    let sizes: Vec<usize> = (config.min_size..=max).collect();
    let strata: Vec<u128> = sizes.iter().map(|&k| sampler.stratum_size(k)).collect();
    let quotas = largest_remainder(config.budget as u128, &strata);
    let mut out = Vec::new();
    for ((&k, &stratum), &quota) in sizes.iter().zip(&strata).zip(&quotas) {
        if quota == 0 {
            continue;
        }
        if quota >= stratum {
            out.extend(enumerate_ensembles(&config.sources, k, k, EnumerationMode::Semantic)?);
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(config.seed, &[k as u64]));
        let mut seen = HashSet::new();
        let mut picked = Vec::new();
        while (picked.len() as u128) < quota {
            let t = sampler.sample(&mut rng, k)?;
            if seen.insert(t.to_string()) {
                picked.push(t);
            }
        }
        picked.sort_by_cached_key(ToString::to_string);
        out.extend(picked);
    }
    Ok(out)
}

/// Splits `total` across `weights` proportionally, rounding by largest
/// remainder; ties go to the earlier stratum.
fn largest_remainder(total: u128, weights: &[u128]) -> Vec<u128> {
    let sum: u128 = weights.iter().sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let total = total.min(sum);
    let mut q: Vec<u128> = weights.iter().map(|w| w * total / sum).collect();
    let mut rem: Vec<(u128, usize)> = weights.iter().enumerate().map(|(i, w)| (w * total % sum, i)).collect();
    rem.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let short = total - q.iter().sum::<u128>();
    for &(_, i) in rem.iter().take(short as usize) {
        q[i] += 1;
    }
    q
}

/// Scores every candidate ensemble for the configured group and reports the
/// ranked panels, Pareto front, and single-system comparison.
pub fn grid_search(store: &AnnotationStore, gold_source: &str, config: &SearchConfig) -> Result<SearchResult> {
    config.validate()?;
    let prepared = PreparedMasks::new(store, gold_source, &config.sources, &config.group)?;
    let n = prepared.sources.len();
    let space = semantic_space_size(n, config.min_size, config.max_size.min(n));
    let trees = candidates(config, n, space)?;
    let scored: Vec<ScoredEnsemble> = trees
        .par_iter()
        .map(|t| {
            Ok(ScoredEnsemble {
                expression: t.to_string(),
                size: t.leaf_count(),
                metrics: prepared.score(t)?,
            })
        })
        .collect::<Result<_>>()?;
    let singles: Vec<ScoredEnsemble> = prepared
        .sources
        .keys()
        .map(|s| {
            Ok(ScoredEnsemble {
                expression: s.clone(),
                size: 1,
                metrics: prepared.score(&ExprTree::leaf(s.as_str()))?,
            })
        })
        .collect::<Result<_>>()?;
    let beats = |e: &ScoredEnsemble| {
        e.size >= 2
            && singles.iter().all(|s| {
                let (x, y) = (&e.metrics, &s.metrics);
                f_of(x).cmp(f_of(y)) == Ordering::Greater
                    && (config.relax_f1_only
                        || (p_of(x).cmp(p_of(y)) == Ordering::Greater && r_of(x).cmp(r_of(y)) == Ordering::Greater))
            })
    };
    let mut beating: Vec<ScoredEnsemble> = scored.iter().filter(|e| beats(e)).cloned().collect();
    beating.sort_by(by_f1);
    Ok(SearchResult {
        corpus: store.corpus_name(),
        group: config.group.label().to_string(),
        space_size: space,
        evaluated: scored.len(),
        top_f1: top(&scored, config.top_k, by_f1),
        top_precision: top(&scored, config.top_k, by_precision),
        top_recall: top(&scored, config.top_k, by_recall),
        pareto: pareto_front(&scored),
        singles,
        beating_all_singles: beating,
    })
}

/// Unions each group's annotations from its assigned source and scores the
/// result against gold over all groups.
pub fn cross_group_union_merge(
    store: &AnnotationStore,
    assignments: &BTreeMap<String, String>,
    gold_source: &str,
) -> Result<MetricsResult> {
    if assignments.is_empty() {
        return Err(Error::config("merge needs at least one group assignment"));
    }
    let sources: Vec<&String> = assignments.values().collect();
    check_sources(store, gold_source, &sources)?;
    let layout = CorpusLayout::from_store(store);
    let mut merged = CorpusMask::empty(layout.clone());
    for (group, source) in assignments {
        let filter = GroupFilter::Group(group.clone());
        store.check_filter(&filter)?;
        if !store.source_has_group(source, group) {
            return Err(Error::validation(format!("source {source:?} has no {group:?} annotations")));
        }
        merged = merged.union(&CorpusMask::from_source(&layout, store, source, &filter))?;
    }
    let gold = CorpusMask::from_source(&layout, store, gold_source, &GroupFilter::All);
    char_prf(&gold, &merged)
}

/// Per-character majority of `sources`; even splits use a coin seeded by
/// `seed` and the document.
pub fn majority_vote_eval<S: AsRef<str>>(
    store: &AnnotationStore,
    sources: &[S],
    gold_source: &str,
    group: &GroupFilter,
    seed: u64,
) -> Result<MetricsResult> {
    if sources.len() < 2 {
        return Err(Error::validation("majority vote needs at least two sources"));
    }
    let prepared = PreparedMasks::new(store, gold_source, sources, group)?;
    let masks: Vec<&CorpusMask> = sources.iter().map(|s| &prepared.sources[s.as_ref()]).collect();
    char_prf(&prepared.gold, &CorpusMask::majority(&masks, seed)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CuiLevel {
    Doc,
    Mention,
}

impl std::str::FromStr for CuiLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "doc" => Ok(CuiLevel::Doc),
            "mention" => Ok(CuiLevel::Mention),
            _ => Err(Error::config(format!("unknown CUI level {s:?} (doc|mention)"))),
        }
    }
}

/// Scores a union ensemble at CUI level. AND has no defined meaning for
/// concept labels and is rejected.
pub fn cui_ensemble_eval(
    store: &AnnotationStore,
    expression: &ExprTree,
    gold_source: &str,
    level: CuiLevel,
    seed: u64,
) -> Result<CuiMetricsResult> {
    if expression.contains_op(Op::And) {
        return Err(Error::Unsupported(format!(
            "intersection is not defined for CUI ensembles: {expression}"
        )));
    }
    let leaves = expression.leaves();
    check_sources(store, gold_source, &leaves)?;
    match level {
        CuiLevel::Doc => {
            let sets = |sources: &[&str]| -> BTreeMap<String, BTreeSet<Cui>> {
                store
                    .documents()
                    .map(|d| {
                        let cuis = sources
                            .iter()
                            .flat_map(|s| store.slice(s, &d.doc_id))
                            .filter_map(|a| a.cui.clone())
                            .collect();
                        (d.doc_id.clone(), cuis)
                    })
                    .collect()
            };
            doc_level_cui_prf(&sets(&[gold_source]), &sets(&leaves))
        }
        CuiLevel::Mention => {
            let gold_seed = seed::derive(seed, &[seed::hash_str(gold_source)]);
            let pred_seed = seed::derive(seed, &[seed::hash_str(&expression.to_string())]);
            let mut gold = Vec::new();
            let mut pred = Vec::new();
            for d in store.documents() {
                let layer = |s: &str, sd: u64| {
                    let anns = store.slice(s, &d.doc_id).iter().filter(|a| a.cui.is_some());
                    CuiMask::from_annotations(&d.doc_id, d.length, anns, sd)
                };
                gold.push(layer(gold_source, gold_seed)?);
                let layers: Vec<CuiMask> = leaves
                    .iter()
                    .map(|s| layer(s, seed::derive(pred_seed, &[seed::hash_str(s)])))
                    .collect::<Result<_>>()?;
                pred.push(if layers.len() == 1 {
                    layers.into_iter().next().expect("one layer")
                } else {
                    merge_cui_layers(&d.doc_id, d.length, &layers, pred_seed)?
                });
            }
            mention_level_cui_prf(&gold, &pred)
        }
    }
}
