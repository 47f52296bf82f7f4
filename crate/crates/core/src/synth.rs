//! Seeded synthetic corpora with controllable per-source error rates and
//! cross-source error correlation.
//!
//! Gold spans are laid out first, non-overlapping with at least one character
//! between neighbours. Each source then copies gold span by span: a span may
//! be dropped, its boundaries jittered, and its CUI swapped; spurious spans
//! are injected into the gaps. For every span (and every gap) a source draws
//! its error variables either from a stream shared by all sources, with
//! probability `correlation`, or from its own stream. The number of draws
//! never depends on the rates, so raising one rate leaves every other
//! decision unchanged.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{disambiguate_store, DisambiguationPolicy};
use crate::model::{Annotation, AnnotationStore, Cui, DocumentRef};
use crate::seed;

/// NLM-style semantic group table used by generated corpora.
pub const DEFAULT_SEMGROUPS: &str = "\
ANAT|Anatomy|T017|Anatomical Structure
ANAT|Anatomy|T023|Body Part, Organ, or Organ Component
CHEM|Chemicals & Drugs|T109|Organic Chemical
CHEM|Chemicals & Drugs|T121|Pharmacologic Substance
DISO|Disorders|T047|Disease or Syndrome
DISO|Disorders|T184|Sign or Symptom
PROC|Procedures|T060|Diagnostic Procedure
PROC|Procedures|T061|Therapeutic or Preventive Procedure
";

const GROUPS: [(&str, [&str; 2]); 4] = [
    ("Anatomy", ["T017", "T023"]),
    ("Chemicals & Drugs", ["T109", "T121"]),
    ("Disorders", ["T047", "T184"]),
    ("Procedures", ["T060", "T061"]),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SourceSpec {
    pub name: String,
    /// Probability a gold span is not reproduced.
    pub miss_rate: f64,
    /// Expected spurious spans per 1000 characters of gap text.
    pub spurious_rate: f64,
    /// Maximum boundary shift in characters.
    pub jitter: usize,
    /// Probability a reproduced span carries a wrong CUI.
    pub cui_error_rate: f64,
    /// Probability a reproduced span also gets a shorter contained copy,
    /// left for overlap disambiguation to remove.
    pub overlap_rate: f64,
    /// Restricts the source to these groups (empty means all).
    pub groups: Vec<String>,
}

impl Default for SourceSpec {
    fn default() -> Self {
        SourceSpec {
            name: String::new(),
            miss_rate: 0.0,
            spurious_rate: 0.0,
            jitter: 0,
            cui_error_rate: 0.0,
            overlap_rate: 0.0,
            groups: Vec::new(),
        }
    }
}

impl SourceSpec {
    pub fn named(name: impl Into<String>) -> Self {
        SourceSpec {
            name: name.into(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub corpus_id: String,
    pub n_docs: usize,
    pub doc_length: usize,
    /// Gold spans per 1000 characters.
    pub span_density: f64,
    pub span_len_min: usize,
    pub span_len_max: usize,
    pub sources: Vec<SourceSpec>,
    pub correlation: f64,
    pub cui_vocab: u32,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            corpus_id: "synth".into(),
            n_docs: 50,
            doc_length: 2000,
            span_density: 20.0,
            span_len_min: 4,
            span_len_max: 16,
            sources: Vec::new(),
            correlation: 0.0,
            cui_vocab: 200,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn spans_per_doc(&self) -> usize {
        (self.span_density * self.doc_length as f64 / 1000.0).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |what: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::config(format!("{what} = {p} is not a probability")))
            }
        };
        prob("correlation", self.correlation)?;
        if self.span_len_min == 0 || self.span_len_min > self.span_len_max {
            return Err(Error::config("span length range is empty"));
        }
        if self.cui_vocab < 2 {
            return Err(Error::config("cui_vocab must be at least 2"));
        }
        if self.span_density < 0.0 || !self.span_density.is_finite() {
            return Err(Error::config("span_density must be non-negative"));
        }
        let n = self.spans_per_doc();
        if n > 0 && n * self.span_len_max + (n - 1) > self.doc_length {
            return Err(Error::config(format!(
                "{n} spans of up to {} chars do not fit in {} chars",
                self.span_len_max, self.doc_length
            )));
        }
        let mut names = std::collections::BTreeSet::new();
        for s in &self.sources {
            if s.name.is_empty() || s.name == "gold" || !names.insert(&s.name) {
                return Err(Error::config(format!("bad or duplicate source name {:?}", s.name)));
            }
            if !s.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(Error::config(format!("source name {:?} is not an identifier", s.name)));
            }
            prob("miss_rate", s.miss_rate)?;
            prob("cui_error_rate", s.cui_error_rate)?;
            prob("overlap_rate", s.overlap_rate)?;
            if s.spurious_rate < 0.0 || !s.spurious_rate.is_finite() {
                return Err(Error::config("spurious_rate must be non-negative"));
            }
            if s.jitter >= self.span_len_min {
                return Err(Error::config(format!(
                    "source {}: jitter {} must be below the minimum span length {}",
                    s.name, s.jitter, self.span_len_min
                )));
            }
            for g in &s.groups {
                if !GROUPS.iter().any(|(name, _)| name == g) {
                    return Err(Error::config(format!("source {}: unknown group {g:?}", s.name)));
                }
            }
        }
        Ok(())
    }
}

/// Raw generated annotations. System sources are not yet disambiguated.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub documents: Vec<DocumentRef>,
    pub gold: Vec<Annotation>,
    pub sources: BTreeMap<String, Vec<Annotation>>,
}

pub const GOLD_SOURCE: &str = "gold";

impl SynthCorpus {
    pub fn group_universe() -> Vec<String> {
        GROUPS.iter().map(|(g, _)| g.to_string()).collect()
    }

    /// Store with groups assigned and system overlaps resolved.
    pub fn to_store(&self, policy: &DisambiguationPolicy) -> Result<AnnotationStore> {
        let anns = self
            .gold
            .iter()
            .chain(self.sources.values().flatten())
            .cloned();
        let store = AnnotationStore::new(self.documents.clone(), anns.collect::<Vec<_>>(), Self::group_universe())?;
        Ok(disambiguate_store(&store, GOLD_SOURCE, policy))
    }

    /// Writes `manifest.jsonl`, `gold.jsonl`, one `<source>.jsonl` per
    /// system, and `semgroups.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<SynthFiles> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest = dir.join("manifest.jsonl");
        write_jsonl(&manifest, &self.documents)?;
        let gold = dir.join("gold.jsonl");
        write_jsonl(&gold, &self.gold)?;
        let mut systems = Vec::new();
        for (name, anns) in &self.sources {
            let p = dir.join(format!("{name}.jsonl"));
            write_jsonl(&p, anns)?;
            systems.push((name.clone(), p));
        }
        let semgroups = dir.join("semgroups.txt");
        fs::write(&semgroups, DEFAULT_SEMGROUPS).map_err(|e| Error::io(&semgroups, e))?;
        Ok(SynthFiles {
            manifest,
            gold,
            systems,
            semgroups,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SynthFiles {
    pub manifest: PathBuf,
    pub gold: PathBuf,
    pub systems: Vec<(String, PathBuf)>,
    pub semgroups: PathBuf,
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for it in items {
        serde_json::to_writer(&mut w, it).map_err(|e| Error::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

struct GoldSpan {
    begin: usize,
    end: usize,
    group: usize,
    tui: &'static str,
    cui: u32,
}

/// Fixed-size bundle of uniform draws for one span or gap.
#[derive(Clone, Copy)]
struct Draws([f64; 6]);

impl Draws {
    fn from<R: Rng>(rng: &mut R) -> Self {
        Draws(std::array::from_fn(|_| rng.random::<f64>()))
    }
}

fn scaled(u: f64, n: usize) -> usize {
    ((u * n as f64) as usize).min(n.saturating_sub(1))
}

pub fn generate(spec: &SynthSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let width = spec.n_docs.max(1).to_string().len().max(4);
    let docs: Vec<DocumentRef> = (0..spec.n_docs)
        .map(|i| DocumentRef {
            doc_id: format!("{}-{:0width$}", spec.corpus_id, i),
            length: spec.doc_length,
            corpus_id: spec.corpus_id.clone(),
        })
        .collect();
    let per_doc: Vec<(Vec<Annotation>, Vec<Vec<Annotation>>)> =
        docs.par_iter().map(|d| generate_doc(spec, d)).collect();
    let mut gold = Vec::new();
    let mut sources: BTreeMap<String, Vec<Annotation>> =
        spec.sources.iter().map(|s| (s.name.clone(), Vec::new())).collect();
    for (g, per_source) in per_doc {
        gold.extend(g);
        for (s, anns) in spec.sources.iter().zip(per_source) {
            sources.get_mut(&s.name).expect("source").extend(anns);
        }
    }
    Ok(SynthCorpus {
        documents: docs,
        gold,
        sources,
    })
}

fn layout_gold(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vec<GoldSpan> {
    let n = spec.spans_per_doc();
    if n == 0 {
        return Vec::new();
    }
    let lens: Vec<usize> = (0..n)
        .map(|_| rng.random_range(spec.span_len_min..=spec.span_len_max))
        .collect();
    let free = spec.doc_length - lens.iter().sum::<usize>() - (n - 1);
    let mut cuts: Vec<usize> = (0..n).map(|_| rng.random_range(0..=free)).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(n);
    let mut pos = 0;
    let mut prev_cut = 0;
    for (i, len) in lens.into_iter().enumerate() {
        pos += cuts[i] - prev_cut + usize::from(i > 0);
        prev_cut = cuts[i];
        let group = rng.random_range(0..GROUPS.len());
        let tui = GROUPS[group].1[rng.random_range(0..2)];
        out.push(GoldSpan {
            begin: pos,
            end: pos + len,
            group,
            tui,
            cui: rng.random_range(1..=spec.cui_vocab),
        });
        pos += len;
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn annotation(doc: &str, source: &str, begin: usize, end: usize, group: usize, tui: &str, cui: u32, score: Option<f64>) -> Annotation {
    Annotation {
        doc_id: doc.to_string(),
        source: source.to_string(),
        begin,
        end,
        group: Some(GROUPS[group].0.to_string()),
        native_type: Some(tui.to_string()),
        cui: Some(Cui::from_number(cui)),
        score,
    }
}

fn generate_doc(spec: &SynthSpec, doc: &DocumentRef) -> (Vec<Annotation>, Vec<Vec<Annotation>>) {
    let doc_seed = seed::derive(spec.seed, &[seed::hash_str(&doc.doc_id)]);
    let mut gold_rng = ChaCha8Rng::seed_from_u64(seed::derive(doc_seed, &[0]));
    let spans = layout_gold(spec, &mut gold_rng);
    let gold = spans
        .iter()
        .map(|g| annotation(&doc.doc_id, GOLD_SOURCE, g.begin, g.end, g.group, g.tui, g.cui, None))
        .collect();

    // gaps[i] lies before spans[i]; the last one follows the final span
    let mut bounds = Vec::with_capacity(spans.len() + 1);
    let mut prev = 0;
    for s in &spans {
        bounds.push((prev, s.begin));
        prev = s.end;
    }
    bounds.push((prev, doc.length));

    let mut shared = ChaCha8Rng::seed_from_u64(seed::derive(doc_seed, &[1]));
    let shared_span: Vec<Draws> = spans.iter().map(|_| Draws::from(&mut shared)).collect();
    let shared_gap: Vec<Draws> = bounds.iter().map(|_| Draws::from(&mut shared)).collect();

    let per_source = spec
        .sources
        .iter()
        .map(|src| {
            let mut own = ChaCha8Rng::seed_from_u64(seed::derive(doc_seed, &[2, seed::hash_str(&src.name)]));
            let allowed = |g: usize| src.groups.is_empty() || src.groups.iter().any(|x| x == GROUPS[g].0);
            let mut out = Vec::new();
            let pick = |own: &mut ChaCha8Rng, shared: Draws| {
                let z = own.random::<f64>();
                let mine = Draws::from(own);
                if z < spec.correlation {
                    shared
                } else {
                    mine
                }
            };
            for (i, g) in spans.iter().enumerate() {
                let Draws(u) = pick(&mut own, shared_span[i]);
                if u[0] < src.miss_rate || !allowed(g.group) {
                    continue;
                }
                let j = src.jitter as i64;
                let shift = |x: f64| (x * (2 * j + 1) as f64).floor() as i64 - j;
                let lo = if i == 0 { 0 } else { g.begin - (g.begin - spans[i - 1].end) / 2 };
                let hi = if i + 1 == spans.len() {
                    doc.length
                } else {
                    g.end + (spans[i + 1].begin - g.end) / 2
                };
                let mut b = (g.begin as i64 + shift(u[1])).clamp(lo as i64, hi as i64) as usize;
                let mut e = (g.end as i64 + shift(u[2])).clamp(lo as i64, hi as i64) as usize;
                if e <= b {
                    (b, e) = (g.begin, g.end);
                }
                let cui = if u[3] < src.cui_error_rate {
                    // any label but the gold one
                    let other = 1 + scaled(u[4], spec.cui_vocab as usize - 1) as u32;
                    if other >= g.cui {
                        other + 1
                    } else {
                        other
                    }
                } else {
                    g.cui
                };
                out.push(annotation(&doc.doc_id, &src.name, b, e, g.group, g.tui, cui, Some(0.5 + u[4] / 2.0)));
                if u[5] < src.overlap_rate && e - b >= 3 {
                    out.push(annotation(&doc.doc_id, &src.name, b + 1, e - 1, g.group, g.tui, cui, Some(0.25)));
                }
            }
            for (k, &(gb, ge)) in bounds.iter().enumerate() {
                let Draws(u) = pick(&mut own, shared_gap[k]);
                // keep clear of neighbours and of their jitter
                let left = if k == 0 { gb } else { gb + src.jitter + 1 };
                let right = if k + 1 == bounds.len() { ge } else { ge.saturating_sub(src.jitter + 1) };
                if right <= left {
                    continue;
                }
                let room = right - left;
                let q = (src.spurious_rate * (ge - gb) as f64 / 1000.0).min(1.0);
                if u[0] >= q {
                    continue;
                }
                let len = (spec.span_len_min + scaled(u[1], spec.span_len_max - spec.span_len_min + 1)).min(room);
                let begin = left + scaled(u[2], room - len + 1);
                let group = scaled(u[3], GROUPS.len());
                if !allowed(group) {
                    continue;
                }
                let tui = GROUPS[group].1[scaled(u[4], 2)];
                let cui = 1 + scaled(u[5], spec.cui_vocab as usize) as u32;
                out.push(annotation(&doc.doc_id, &src.name, begin, begin + len, group, tui, cui, Some(0.5 * u[4])));
            }
            out.sort_by_key(|a| (a.begin, a.end));
            out
        })
        .collect();
    (gold, per_source)
}
