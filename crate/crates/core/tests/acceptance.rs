//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Oracles here are written independently of the
//! library code they check.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use boolens::complementarity::{comp_rate, error_set, marginal_comp_rates, ErrorSet};
use boolens::config::RunConfig;
use boolens::expr::{
    enumerate_ensembles, semantic_count, syntactic_count, truth_table_signature, EnumerationMode, ExprTree, Op,
};
use boolens::ingest::{ingest_corpus, DisambiguationPolicy};
use boolens::metrics::{bernoulli_ci, char_prf, ci_overlap_significant, doc_level_cui_prf, mention_level_cui_prf, Z95};
use boolens::model::{Annotation, AnnotationStore, Cui, DocumentRef, GroupFilter};
use boolens::search::{grid_search, PreparedMasks, SearchConfig};
use boolens::seed;
use boolens::span::{merge_cui_layers, CharMask, CorpusLayout, CorpusMask, CuiMask, CuiRun, SetAlgebra};
use boolens::synth::{generate, SourceSpec, SynthSpec};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("enumeration oracle", c1_enumeration),
        ("evaluation oracle", c2_evaluation),
        ("algebraic laws", c3_laws),
        ("monotonicity", c4_monotonicity),
        ("statistics", c5_statistics),
        ("complementarity", c6_complementarity),
        ("CUI matching", c7_cui),
        ("synthetic end-to-end", c8_synthetic),
        ("determinism", c9_determinism),
        ("report layouts", c10_shapes),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panic: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------- shared fixtures ----------

fn names(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("S{i}")).collect()
}

/// Random store: `n_docs` documents, `sources` systems plus `gold`, spans
/// in one group. Overlaps are allowed; masks merge them.
fn random_store(rng: &mut ChaCha8Rng, n_docs: usize, sources: &[String]) -> AnnotationStore {
    let docs: Vec<DocumentRef> = (0..n_docs)
        .map(|i| DocumentRef {
            doc_id: format!("d{i:03}"),
            length: rng.random_range(1..300),
            corpus_id: "rand".into(),
        })
        .collect();
    let mut anns = Vec::new();
    for d in &docs {
        for s in sources.iter().map(String::as_str).chain(["gold"]) {
            for _ in 0..rng.random_range(0..6) {
                let b = rng.random_range(0..d.length);
                let e = rng.random_range(b + 1..=d.length.min(b + 40));
                anns.push(Annotation {
                    doc_id: d.doc_id.clone(),
                    source: s.into(),
                    begin: b,
                    end: e,
                    group: Some("G".into()),
                    native_type: None,
                    cui: None,
                    score: None,
                });
            }
        }
    }
    AnnotationStore::new(docs, anns, vec!["G".into()]).expect("valid random store")
}

/// Per-document bit vectors read straight from the annotations.
fn bool_masks(store: &AnnotationStore, source: &str) -> BTreeMap<String, Vec<bool>> {
    store
        .documents()
        .map(|d| {
            let mut v = vec![false; d.length];
            for a in store.slice(source, &d.doc_id) {
                v[a.begin..a.end].iter_mut().for_each(|x| *x = true);
            }
            (d.doc_id.clone(), v)
        })
        .collect()
}

fn random_tree(rng: &mut ChaCha8Rng, leaves: &[String], ops: Option<Op>) -> ExprTree {
    if leaves.len() == 1 {
        return ExprTree::leaf(leaves[0].as_str());
    }
    let cut = rng.random_range(1..leaves.len());
    let (l, r) = leaves.split_at(cut);
    let op = ops.unwrap_or(if rng.random::<bool>() { Op::And } else { Op::Or });
    ExprTree::binary(op, random_tree(rng, l, ops), random_tree(rng, r, ops))
}

fn random_subset(rng: &mut ChaCha8Rng, pool: &[String], max: usize) -> Vec<String> {
    let k = rng.random_range(1..=max.min(pool.len()));
    let mut v = pool.to_vec();
    v.shuffle(rng);
    v.truncate(k);
    v
}

fn oracle_eval(t: &ExprTree, bind: &HashMap<&str, &Vec<bool>>) -> Vec<bool> {
    match t {
        ExprTree::Leaf(s) => bind[s.as_str()].clone(),
        ExprTree::And(l, r) => {
            let (a, b) = (oracle_eval(l, bind), oracle_eval(r, bind));
            a.iter().zip(&b).map(|(x, y)| *x && *y).collect()
        }
        ExprTree::Or(l, r) => {
            let (a, b) = (oracle_eval(l, bind), oracle_eval(r, bind));
            a.iter().zip(&b).map(|(x, y)| *x || *y).collect()
        }
    }
}

fn to_bools(m: &CharMask) -> Vec<bool> {
    (0..m.len()).map(|i| m.get(i)).collect()
}

/// Exact rational compare of `a/b` against `c/d`, zero denominators read as 0.
fn ratio_ge(a: u64, b: u64, c: u64, d: u64) -> bool {
    let (a, b) = if b == 0 { (0, 1) } else { (a, b) };
    let (c, d) = if d == 0 { (0, 1) } else { (c, d) };
    a as u128 * d as u128 >= c as u128 * b as u128
}

// ---------- criteria ----------

/// Truth tables of every read-once formula over exactly the leaves in
/// `subset`, built by splitting the set every possible way.
fn oracle_tables(subset: u32, k: usize, memo: &mut HashMap<u32, BTreeSet<u32>>) -> BTreeSet<u32> {
    if let Some(t) = memo.get(&subset) {
        return t.clone();
    }
    let rows = 1u32 << k;
    let mut out = BTreeSet::new();
    if subset.count_ones() == 1 {
        let j = subset.trailing_zeros() as usize;
        let mut col = 0u32;
        for i in 0..rows {
            if (i >> (k - 1 - j)) & 1 == 1 {
                col |= 1 << i;
            }
        }
        out.insert(col);
    } else {
        // proper nonempty sub-masks
        let mut l = (subset - 1) & subset;
        while l > 0 {
            let r = subset & !l;
            for a in oracle_tables(l, k, memo) {
                for b in oracle_tables(r, k, memo) {
                    out.insert(a & b);
                    out.insert(a | b);
                }
            }
            l = (l - 1) & subset;
        }
    }
    memo.insert(subset, out.clone());
    out
}

fn c1_enumeration() -> Check {
    let start = Instant::now();
    let mut counts = Vec::new();
    for k in 2..=5usize {
        let oracle = oracle_tables((1u32 << k) - 1, k, &mut HashMap::new());
        let src = names(k);
        let trees = enumerate_ensembles(&src, k, k, EnumerationMode::Semantic).map_err(|e| e.to_string())?;
        let tables: BTreeSet<u32> = trees
            .iter()
            .map(|t| {
                let sig = truth_table_signature(t).expect("signature");
                (0..sig.rows()).filter(|&i| sig.row(i)).fold(0u32, |acc, i| acc | 1 << i)
            })
            .collect();
        ensure!(tables.len() == trees.len(), "k={k}: enumeration repeats a function");
        ensure!(tables == oracle, "k={k}: enumerated functions differ from oracle");
        ensure!(semantic_count(k) == oracle.len() as u128, "k={k}: closed-form count {}", semantic_count(k));
        counts.push(oracle.len());
    }
    let syn = enumerate_ensembles(&names(2), 2, 2, EnumerationMode::Syntactic).map_err(|e| e.to_string())?;
    ensure!(syn.len() == 4 && syntactic_count(2) == 4, "SYNTACTIC k=2 gave {}", syn.len());
    let secs = start.elapsed().as_secs_f64();
    ensure!(counts == [2, 8, 52, 472], "counts {counts:?}");
    ensure!(secs < 10.0, "took {secs:.2} s");
    Ok(format!("counts {counts:?} match the truth-table oracle in {secs:.2} s (< 10 s); SYNTACTIC k=2 = 4"))
}

fn c2_evaluation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2002);
    let src = names(5);
    let store = random_store(&mut rng, 200, &src);
    let layout = CorpusLayout::from_store(&store);
    let masks: BTreeMap<String, CorpusMask> = src
        .iter()
        .chain(std::iter::once(&"gold".to_string()))
        .map(|s| (s.clone(), CorpusMask::from_source(&layout, &store, s, &GroupFilter::All)))
        .collect();
    let bools: BTreeMap<String, BTreeMap<String, Vec<bool>>> = src
        .iter()
        .chain(std::iter::once(&"gold".to_string()))
        .map(|s| (s.clone(), bool_masks(&store, s)))
        .collect();
    let gold = &bools["gold"];
    for case in 0..500 {
        let leaves = random_subset(&mut rng, &src, 5);
        let tree = random_tree(&mut rng, &leaves, None);
        let got = tree.evaluate(&|s| masks.get(s)).map_err(|e| e.to_string())?;
        let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
        for d in store.documents() {
            let bind: HashMap<&str, &Vec<bool>> = src.iter().map(|s| (s.as_str(), &bools[s][&d.doc_id])).collect();
            let want = oracle_eval(&tree, &bind);
            let have = to_bools(&got.doc_mask(&d.doc_id).expect("doc"));
            ensure!(have == want, "case {case}: {tree} differs on {}", d.doc_id);
            for (g, p) in gold[&d.doc_id].iter().zip(&want) {
                match (*g, *p) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fn_ += 1,
                    _ => {}
                }
            }
        }
        let m = char_prf(&masks["gold"], &got).map_err(|e| e.to_string())?;
        ensure!((m.tp, m.fp, m.fn_) == (tp, fp, fn_), "case {case}: {tree} counts {:?} vs oracle {:?}", (m.tp, m.fp, m.fn_), (tp, fp, fn_));
    }
    Ok(format!("500 random trees over {} docs bit-identical to the oracle; confusion counts exact", store.num_documents()))
}

/// Same function, different syntax: shuffles children of every node and
/// re-associates chains of a single operator.
fn scramble(rng: &mut ChaCha8Rng, t: &ExprTree) -> ExprTree {
    fn flatten(t: &ExprTree, op: Op, out: &mut Vec<ExprTree>) {
        match (t, op) {
            (ExprTree::And(l, r), Op::And) | (ExprTree::Or(l, r), Op::Or) => {
                flatten(l, op, out);
                flatten(r, op, out);
            }
            _ => out.push(t.clone()),
        }
    }
    fn rebuild(rng: &mut ChaCha8Rng, op: Op, mut items: Vec<ExprTree>) -> ExprTree {
        if items.len() == 1 {
            return items.pop().expect("one");
        }
        let cut = rng.random_range(1..items.len());
        let right = items.split_off(cut);
        ExprTree::binary(op, rebuild(rng, op, items), rebuild(rng, op, right))
    }
    match t {
        ExprTree::Leaf(_) => t.clone(),
        ExprTree::And(..) | ExprTree::Or(..) => {
            let op = if matches!(t, ExprTree::And(..)) { Op::And } else { Op::Or };
            let mut parts = Vec::new();
            flatten(t, op, &mut parts);
            let mut parts: Vec<ExprTree> = parts.iter().map(|p| scramble(rng, p)).collect();
            parts.shuffle(rng);
            rebuild(rng, op, parts)
        }
    }
}

fn random_corpus_mask(rng: &mut ChaCha8Rng, layout: &std::sync::Arc<CorpusLayout>) -> CorpusMask {
    let docs: Vec<CharMask> = layout
        .docs()
        .iter()
        .map(|d| {
            let bits: String = (0..d.len).map(|_| if rng.random::<bool>() { '1' } else { '0' }).collect();
            CharMask::from_bits(d.doc_id.clone(), &bits).expect("bits")
        })
        .collect();
    CorpusMask::from_doc_masks(layout, &docs).expect("mask")
}

fn c3_laws() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    let layout = CorpusLayout::new((0..8).map(|i| (format!("d{i}"), 1 + i * 37))).map_err(|e| e.to_string())?;
    let mut cases = 0;
    for _ in 0..1000 {
        let (a, b, c) = (
            random_corpus_mask(&mut rng, &layout),
            random_corpus_mask(&mut rng, &layout),
            random_corpus_mask(&mut rng, &layout),
        );
        let u = |x: &CorpusMask, y: &CorpusMask| x.union(y).expect("union");
        let i = |x: &CorpusMask, y: &CorpusMask| x.intersect(y).expect("intersect");
        ensure!(u(&a, &b) == u(&b, &a), "union not commutative");
        ensure!(i(&a, &b) == i(&b, &a), "intersection not commutative");
        ensure!(u(&u(&a, &b), &c) == u(&a, &u(&b, &c)), "union not associative");
        ensure!(i(&i(&a, &b), &c) == i(&a, &i(&b, &c)), "intersection not associative");
        ensure!(u(&a, &a) == a && i(&a, &a) == a, "idempotence fails");
        cases += 1;
    }
    let src = names(5);
    let masks: BTreeMap<String, CorpusMask> =
        src.iter().map(|s| (s.clone(), random_corpus_mask(&mut rng, &layout))).collect();
    for _ in 0..1000 {
        let leaves = random_subset(&mut rng, &src, 5);
        let t = random_tree(&mut rng, &leaves, None);
        let s = scramble(&mut rng, &t);
        ensure!(
            truth_table_signature(&t).ok() == truth_table_signature(&s).ok(),
            "{t} and {s} should share a signature"
        );
        // fresh random bindings for each pair
        let bind: BTreeMap<&str, CorpusMask> =
            leaves.iter().map(|l| (l.as_str(), random_corpus_mask(&mut rng, &layout))).collect();
        let ev = |x: &ExprTree| x.evaluate(&|n| bind.get(n)).expect("evaluate");
        ensure!(ev(&t) == ev(&s), "{t} vs {s} evaluate differently");
        cases += 1;
    }
    for _ in 0..500 {
        let leaves = random_subset(&mut rng, &src, 5);
        for op in [Op::Or, Op::And] {
            let t = random_tree(&mut rng, &leaves, Some(op));
            let got = t.evaluate(&|n| masks.get(n)).map_err(|e| e.to_string())?;
            let mut flat = masks[&leaves[0]].clone();
            for l in &leaves[1..] {
                flat = match op {
                    Op::Or => flat.union(&masks[l]),
                    Op::And => flat.intersect(&masks[l]),
                }
                .expect("flat");
            }
            ensure!(got == flat, "{t} differs from the flat fold");
            cases += 1;
        }
    }
    Ok(format!("{cases} random cases (set laws, equal-signature evaluation, flat OR/AND), 0 failures"))
}

fn c4_monotonicity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4004);
    let src = names(5);
    let mut checked = 0;
    for _ in 0..40 {
        let store = random_store(&mut rng, 30, &src);
        let p = PreparedMasks::new(&store, "gold", &src, &GroupFilter::All).map_err(|e| e.to_string())?;
        for _ in 0..25 {
            let leaves = random_subset(&mut rng, &src, 5);
            let single: Vec<_> = leaves
                .iter()
                .map(|l| p.score(&ExprTree::leaf(l.as_str())).expect("score"))
                .collect();
            let or = p.score(&random_tree(&mut rng, &leaves, Some(Op::Or))).expect("score");
            let and = p.score(&random_tree(&mut rng, &leaves, Some(Op::And))).expect("score");
            for s in &single {
                ensure!(ratio_ge(or.tp, or.tp + or.fn_, s.tp, s.tp + s.fn_), "OR recall below an operand");
                ensure!(ratio_ge(s.tp, s.tp + s.fn_, and.tp, and.tp + and.fn_), "AND recall above an operand");
            }
            checked += 1;
        }
    }
    let mut searches = 0;
    for _ in 0..15 {
        let k = rng.random_range(1..=4);
        let srcs = names(k);
        let store = random_store(&mut rng, 20, &srcs);
        let r = grid_search(&store, "gold", &SearchConfig::new(srcs.iter().cloned())).map_err(|e| e.to_string())?;
        let best_single = r.singles.iter().map(|s| s.metrics.f1).fold(0.0, f64::max);
        ensure!(r.top_f1[0].metrics.f1 >= best_single, "top F1 {} below best single {best_single}", r.top_f1[0].metrics.f1);
        searches += 1;
    }
    Ok(format!("{checked} OR/AND instances and {searches} grid searches, 0 violations"))
}

fn c5_statistics() -> Check {
    let (lo, hi) = bernoulli_ci(0.5, 100, Z95).map_err(|e| e.to_string())?;
    ensure!((lo - 0.402).abs() <= 1e-3 && (hi - 0.598).abs() <= 1e-3, "CI(0.5, 100) = ({lo}, {hi})");
    let mut worst: f64 = 0.0;
    for &p in &[0.1, 0.25, 0.5, 0.73, 0.9] {
        for &n in &[10u64, 100, 1234, 100_000] {
            let w = |n| {
                let (a, b) = bernoulli_ci(p, n, Z95).expect("ci");
                b - a
            };
            // stay clear of clipping at 0 or 1
            let (a, b) = bernoulli_ci(p, n, Z95).expect("ci");
            if a == 0.0 || b == 1.0 {
                continue;
            }
            worst = worst.max((w(n) / w(4 * n) - 2.0).abs());
        }
    }
    ensure!(worst <= 1e-9, "width ratio off by {worst}");
    let hand = [
        ((0.40, 0.60), (0.55, 0.70), false),
        ((0.40, 0.50), (0.55, 0.70), true),
        ((0.4, 0.5), (0.5, 0.6), false),
    ];
    for (a, b, want) in hand {
        ensure!(ci_overlap_significant(a, b) == want, "overlap {a:?} vs {b:?}");
        ensure!(ci_overlap_significant(b, a) == want, "overlap {b:?} vs {a:?}");
    }
    Ok(format!("CI(0.5, 100) = ({lo:.4}, {hi:.4}); max |ratio - 2| = {worst:.1e}; 3 overlap cases"))
}

fn single_doc(len: usize) -> std::sync::Arc<CorpusLayout> {
    CorpusLayout::new([("d", len)]).expect("layout")
}

fn bits(l: &std::sync::Arc<CorpusLayout>, b: &str) -> CorpusMask {
    CorpusMask::from_doc_masks(l, [&CharMask::from_bits("d", b).expect("bits")]).expect("mask")
}

fn c6_complementarity() -> Check {
    let e = |r: boolens::Result<f64>| r.map_err(|e| e.to_string());
    let l = single_doc(12);
    let gold = bits(&l, "111111111111");
    let a = bits(&l, "111111000000");
    let none = error_set(&gold, &gold).map_err(|e| e.to_string())?;
    let ea = error_set(&gold, &a).map_err(|e| e.to_string())?;
    ensure!(e(comp_rate(&ea, &ea))? == 0.0, "comp_rate(A, A) != 0");
    ensure!(e(comp_rate(&ea, &none))? == 100.0, "empty errors_B should give 100");

    // disjoint misses, perfect precision
    let l = single_doc(20);
    let gold = bits(&l, "11111111110000000000");
    let a = bits(&l, "11111000000000000000");
    let b = bits(&l, "00000111110000000000");
    let (ea, eb) = (error_set(&gold, &a).map_err(|x| x.to_string())?, error_set(&gold, &b).map_err(|x| x.to_string())?);
    let (ab, ba) = (e(comp_rate(&ea, &eb))?, e(comp_rate(&eb, &ea))?);
    ensure!(ab == 100.0 && ba == 100.0, "disjoint comp rates {ab}, {ba}");
    let union = char_prf(&gold, &a.union(&b).map_err(|x| x.to_string())?).map_err(|x| x.to_string())?;
    ensure!(union.recall == 1.0, "union recall {}", union.recall);

    // nested error pools
    let mut rng = ChaCha8Rng::seed_from_u64(6006);
    let l = single_doc(200);
    for _ in 0..200 {
        let mut positions: Vec<usize> = (0..200).collect();
        positions.shuffle(&mut rng);
        let mut size = 200;
        let mut pool = Vec::new();
        for _ in 0..rng.random_range(2..7) {
            size = rng.random_range(0..=size);
            let mut s = vec!['0'; 200];
            positions[..size].iter().for_each(|&p| s[p] = '1');
            pool.push(ErrorSet::from(bits(&l, &s.iter().collect::<String>())));
        }
        // the candidate's errors sit in the same chain
        let mut cand = vec!['0'; 200];
        positions[..rng.random_range(0..=200)].iter().for_each(|&p| cand[p] = '1');
        let cand = ErrorSet::from(bits(&l, &cand.iter().collect::<String>()));
        let rates = marginal_comp_rates(&pool, &cand).map_err(|x| x.to_string())?;
        ensure!(rates.windows(2).all(|w| w[1] <= w[0] + 1e-12), "marginal rates rose: {rates:?}");
        ensure!(rates.iter().all(|r| (0.0..=100.0).contains(r)), "rate out of range: {rates:?}");
    }
    Ok("self = 0%, empty partner = 100%, disjoint pair 100%/100% with union recall 1.0; 200 nested pools non-increasing".into())
}

fn c7_cui() -> Check {
    let c = Cui::from_number;
    let gold = BTreeMap::from([("d".to_string(), BTreeSet::from([c(1), c(2)]))]);
    let pred = BTreeMap::from([("d".to_string(), BTreeSet::from([c(2), c(3)]))]);
    let doc = doc_level_cui_prf(&gold, &pred).map_err(|e| e.to_string())?;
    ensure!((doc.macro_f1 - 1.0 / 3.0).abs() < 1e-12, "doc-level macro F1 {}", doc.macro_f1);

    let g = CuiMask::single("d", 20, 0, 10, c(1)).map_err(|e| e.to_string())?;
    let p = CuiMask::single("d", 20, 5, 15, c(1)).map_err(|e| e.to_string())?;
    let men = mention_level_cui_prf(&[g], &[p]).map_err(|e| e.to_string())?;
    ensure!(men.macro_f1 == 0.5, "mention-level F1 {}", men.macro_f1);

    let layer = |runs: &[(usize, usize, u32)]| {
        let runs = runs
            .iter()
            .map(|&(b, e, n)| CuiRun {
                begin: b,
                end: e,
                cui: c(n),
                span_len: e - b,
            })
            .collect();
        CuiMask::from_runs("d", 10, runs).expect("layer")
    };
    let labels = |m: &CuiMask| (0..10).map(|i| m.label_at(i).map(|x| x.as_str().to_string())).collect::<Vec<_>>();
    let name = |n: u32| Some(c(n).as_str().to_string());

    // chars 2..6: two votes for C1 beat the longer C2; elsewhere 1-1 and C2's span is longer
    let layers = [layer(&[(0, 6, 1)]), layer(&[(2, 8, 1)]), layer(&[(0, 10, 2)])];
    let merged = merge_cui_layers("d", 10, &layers, 0).map_err(|e| e.to_string())?;
    let want: Vec<_> = [2, 2, 1, 1, 1, 1, 2, 2, 2, 2].into_iter().map(name).collect();
    ensure!(labels(&merged) == want, "majority/length trace {:?}", labels(&merged));

    // equal votes and lengths: seeded per-character choice
    let layers = [layer(&[(0, 4, 1)]), layer(&[(0, 4, 2)]), layer(&[])];
    let mut seen = BTreeSet::new();
    for s in 0..32u64 {
        let m = merge_cui_layers("d", 10, &layers, s).map_err(|e| e.to_string())?;
        ensure!(m == merge_cui_layers("d", 10, &layers, s).expect("merge"), "seed {s} not reproducible");
        for i in 0..4 {
            let pick = seed::pick(seed::derive(s, &[seed::hash_str("d"), i as u64]), 2);
            let want = name([1, 2][pick]);
            ensure!(labels(&m)[i] == want, "seed {s} char {i}: {:?} vs {want:?}", labels(&m)[i]);
            seen.insert(pick);
        }
        ensure!(labels(&m)[4..].iter().all(Option::is_none), "OUTSIDE leaked");
    }
    ensure!(seen.len() == 2, "seeded tie never picked both labels");
    Ok("doc macro F1 = 1/3, mention F1 = 0.5, three-layer majority/length/seeded traces match".into())
}

fn write_config(dir: &Path, files: &boolens::synth::SynthFiles, extra: &str) -> std::path::PathBuf {
    let mut text = format!(
        "seed = 11\n{extra}\n[corpus]\nmanifest = {:?}\ngold = {:?}\nsemgroups = {:?}\n\n[systems]\n",
        files.manifest, files.gold, files.semgroups
    );
    for (n, p) in &files.systems {
        text.push_str(&format!("{n} = {p:?}\n"));
    }
    let path = dir.join("config.toml");
    fs::write(&path, text).expect("write config");
    path
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let mut full = vec!["boolens"];
    full.extend_from_slice(args);
    match boolens::app::main(full) {
        0 => Ok(()),
        code => Err(format!("boolens {} exited {code}", args.join(" "))),
    }
}

fn c8_synthetic() -> Check {
    let mut a = SourceSpec::named("A");
    a.miss_rate = 0.5;
    let mut b = SourceSpec::named("B");
    b.miss_rate = 0.5;
    let spec = SynthSpec {
        n_docs: 2000,
        doc_length: 2000,
        span_density: 25.0,
        sources: vec![a, b],
        correlation: 0.0,
        seed: 8,
        ..Default::default()
    };
    let corpus = generate(&spec).map_err(|e| e.to_string())?;
    let n_spans = corpus.gold.len();
    ensure!(n_spans >= 100_000, "only {n_spans} gold spans");
    let store = corpus.to_store(&DisambiguationPolicy::new(0)).map_err(|e| e.to_string())?;
    let p = PreparedMasks::new(&store, "gold", &["A", "B"], &GroupFilter::All).map_err(|e| e.to_string())?;
    let union = p.score(&boolens::expr::parse("A|B").expect("expr")).map_err(|e| e.to_string())?.recall;
    let single = p.score(&ExprTree::leaf("A")).map_err(|e| e.to_string())?.recall;
    let expected = 1.0 - 0.5 * 0.5;
    ensure!((union - expected).abs() <= 0.01, "union recall {union:.4} vs {expected}");
    ensure!((single - 0.5).abs() <= 0.01, "single recall {single:.4}");

    // full pipeline at 5 sources, 1000 x 2000
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let big = boolens::app::demo_spec(21);
    let big = SynthSpec { n_docs: 1000, doc_length: 2000, ..big };
    let gen = generate(&big).map_err(|e| e.to_string())?;
    let files = gen.write(dir.path()).map_err(|e| e.to_string())?;
    let cfg_path = write_config(dir.path(), &files, "");
    let cfg = RunConfig::load(&cfg_path).map_err(|e| e.to_string())?;
    let ingested = ingest_corpus(&cfg.corpus_inputs().map_err(|e| e.to_string())?, &DisambiguationPolicy::new(11))
        .map_err(|e| e.to_string())?;
    ensure!(
        ingested.store == gen.to_store(&DisambiguationPolicy::new(11)).map_err(|e| e.to_string())?,
        "ingested store differs from the generated one"
    );
    let report = dir.path().join("search.csv");
    run_cli(&["search", "--config", cfg_path.to_str().unwrap(), "--out", report.to_str().unwrap()])?;
    let rows = fs::read_to_string(&report).map_err(|e| e.to_string())?.lines().count();
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "pipeline took {secs:.1} s");
    Ok(format!(
        "union recall {union:.4} vs 0.75 (single {single:.4}) over {n_spans} spans; 5x1000x2000 pipeline in {secs:.1} s ({rows} report lines)"
    ))
}

fn determinism_corpus(dir: &Path) -> std::path::PathBuf {
    let spec = SynthSpec { n_docs: 120, ..boolens::app::demo_spec(5) };
    let files = generate(&spec).expect("generate").write(dir).expect("write");
    write_config(
        dir,
        &files,
        "tasks = [\"ner_eval\", \"search\", \"vote\", \"cui_eval\", \"complementarity\"]\nlevel = \"mention\"\n\n[search]\nbudget = 300\nmode = \"sampled\"\n",
    )
}

fn read_dir_sorted(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .expect("read dir")
        .map(|e| {
            let e = e.expect("entry");
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).expect("read"))
        })
        .collect()
}

fn c9_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = determinism_corpus(dir.path());
    let cfg = cfg.to_str().unwrap();
    let mut outputs = Vec::new();
    for (tag, threads, format) in [
        ("a", "4", "csv"),
        ("b", "4", "csv"),
        ("one", "1", "csv"),
        ("many", "8", "csv"),
        ("j1", "1", "json"),
        ("j8", "8", "json"),
    ] {
        let out = dir.path().join(format!("out_{tag}"));
        run_cli(&["run", "--config", cfg, "--threads", threads, "--format", format, "--out", out.to_str().unwrap()])?;
        outputs.push((tag, read_dir_sorted(&out)));
    }
    ensure!(outputs[0].1.len() == 5, "expected 5 reports, got {}", outputs[0].1.len());
    ensure!(outputs[0].1 == outputs[1].1, "two identical runs differ");
    ensure!(outputs[2].1 == outputs[3].1, "1 thread vs 8 threads differ (csv)");
    ensure!(outputs[0].1 == outputs[2].1, "4 threads vs 1 thread differ");
    ensure!(outputs[4].1 == outputs[5].1, "1 thread vs 8 threads differ (json)");
    let bytes: usize = outputs[0].1.values().map(Vec::len).sum();
    Ok(format!("5 reports ({bytes} bytes) byte-identical across repeat runs and 1/4/8 threads, csv and json"))
}

fn c10_shapes() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = determinism_corpus(dir.path());
    let out = dir.path().join("md");
    run_cli(&["run", "--config", cfg.to_str().unwrap(), "--format", "markdown", "--out", out.to_str().unwrap()])?;
    let read = |f: &str| fs::read_to_string(out.join(f)).map_err(|e| e.to_string());

    let t2 = read("ner_eval.md")?;
    ensure!(t2.starts_with("| Corpus | Group | System | n | p | r | F1 |"), "single-system header: {}", t2.lines().next().unwrap_or(""));
    let t2_rows = t2.lines().count() - 2;
    ensure!(t2_rows == 5 * 5, "single-system table has {t2_rows} rows, expected 5 groups x 5 systems");

    let t3 = read("search.md")?;
    for panel in ["Highest F1-score", "Highest precision", "Highest recall"] {
        ensure!(t3.contains(panel), "ensemble table lacks the {panel} panel");
    }
    ensure!(t3.matches("beat every single system").count() == 5, "ensemble table lacks per-group dominance lines");

    let t4 = read("vote.md")?;
    ensure!(t4.contains("| Voters |") && t4.contains("vote(A,B,C,D,E)"), "vote table shape");

    let t5 = read("cui_eval.md")?;
    ensure!(t5.contains("| Macro F1 |") && t5.contains(r"((((A\|B)\|C)\|D)\|E)"), "CUI table shape");

    let json_out = dir.path().join("search.json");
    run_cli(&["search", "--config", cfg.to_str().unwrap(), "--format", "json", "--group", "all", "--out", json_out.to_str().unwrap()])?;
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json_out).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let res = &v["rows"][0];
    let beating = res["beating_all_singles"].as_array().ok_or("no beating_all_singles list")?;
    ensure!(res["top_f1"].as_array().is_some_and(|a| !a.is_empty()), "empty F1 panel");

    let csv_out = dir.path().join("search.csv");
    run_cli(&["search", "--config", cfg.to_str().unwrap(), "--group", "all", "--out", csv_out.to_str().unwrap()])?;
    let header = fs::read_to_string(&csv_out).map_err(|e| e.to_string())?.lines().next().unwrap_or("").to_string();
    ensure!(
        header == "corpus,group,combination,p,r,f1,p_lo,p_hi,r_lo,r_hi,f1_lo,f1_hi,tp,fp,fn,n_gold,n_pred",
        "CSV header {header}"
    );
    Ok(format!(
        "single, ensemble, vote and CUI layouts emitted; ensemble panels F1/p/r; {} ensembles beat every single system on all groups",
        beating.len()
    ))
}
