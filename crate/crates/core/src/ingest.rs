//! Annotation, manifest, and semantic-group file parsing, group mapping, and
//! overlap disambiguation.
//!
//! Interchange files are UTF-8 with one JSON object per line; blank lines are
//! skipped and unknown fields ignored. The semantic groups file uses the
//! four-column pipe-delimited NLM layout `ABBR|Group Name|TUI|Type Name`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{summarize, Annotation, AnnotationStore, Cui, DocumentRef, SemanticGroupMap};
use crate::seed;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn json_lines<'a, T: Deserialize<'a>>(
    text: &'a str,
    origin: &Path,
) -> Result<Vec<(usize, T)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(line).map_err(|e| Error::ParseLine {
            path: origin.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, rec));
    }
    Ok(out)
}

#[derive(Deserialize)]
struct ManifestRecord {
    doc_id: String,
    length: i64,
    corpus_id: String,
}

pub fn load_corpus_manifest(path: impl AsRef<Path>) -> Result<Vec<DocumentRef>> {
    let path = path.as_ref();
    parse_corpus_manifest(&read(path)?, path)
}

pub fn parse_corpus_manifest(text: &str, origin: &Path) -> Result<Vec<DocumentRef>> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut out = Vec::new();
    for (line, r) in json_lines::<ManifestRecord>(text, origin)? {
        if r.length < 0 {
            return Err(Error::validation(format!(
                "{}:{line}: negative length {} for doc {:?}",
                origin.display(),
                r.length,
                r.doc_id
            )));
        }
        if let Some(first) = seen.insert(r.doc_id.clone(), line) {
            return Err(Error::validation(format!(
                "{}:{line}: duplicate doc_id {:?} (first on line {first})",
                origin.display(),
                r.doc_id
            )));
        }
        out.push(DocumentRef {
            doc_id: r.doc_id,
            length: r.length as usize,
            corpus_id: r.corpus_id,
        });
    }
    Ok(out)
}

#[derive(Deserialize)]
struct AnnotationRecord {
    doc_id: String,
    source: String,
    begin: i64,
    end: i64,
    #[serde(default)]
    group: Option<String>,
    #[serde(default)]
    native_type: Option<String>,
    #[serde(default)]
    cui: Option<String>,
    #[serde(default)]
    score: Option<f64>,
}

/// Loads and validates annotations. `expected_source = None` accepts any
/// source name.
pub fn load_annotations(
    path: impl AsRef<Path>,
    expected_source: Option<&str>,
    documents: &[DocumentRef],
) -> Result<Vec<Annotation>> {
    let path = path.as_ref();
    parse_annotations(&read(path)?, path, expected_source, documents)
}

pub fn parse_annotations(
    text: &str,
    origin: &Path,
    expected_source: Option<&str>,
    documents: &[DocumentRef],
) -> Result<Vec<Annotation>> {
    let lengths: HashMap<&str, usize> = documents.iter().map(|d| (d.doc_id.as_str(), d.length)).collect();
    let mut problems = Vec::new();
    let mut out = Vec::new();
    for (line, r) in json_lines::<AnnotationRecord>(text, origin)? {
        let at = format!("{}:{line}", origin.display());
        if let Some(want) = expected_source {
            if r.source != want {
                problems.push(format!("{at}: source {:?}, expected {want:?}", r.source));
                continue;
            }
        }
        let Some(&len) = lengths.get(r.doc_id.as_str()) else {
            problems.push(format!("{at}: unknown doc_id {:?}", r.doc_id));
            continue;
        };
        if r.begin < 0 || r.begin >= r.end || r.end as usize > len {
            problems.push(format!(
                "{at}: span [{}, {}) invalid for doc {:?} of length {len}",
                r.begin, r.end, r.doc_id
            ));
            continue;
        }
        let cui = match r.cui.map(Cui::new).transpose() {
            Ok(c) => c,
            Err(e) => {
                problems.push(format!("{at}: {e}"));
                continue;
            }
        };
        if let Some(s) = r.score {
            if !(0.0..=1.0).contains(&s) {
                problems.push(format!("{at}: score {s} outside [0, 1]"));
                continue;
            }
        }
        out.push(Annotation {
            doc_id: r.doc_id,
            source: r.source,
            begin: r.begin as usize,
            end: r.end as usize,
            group: r.group,
            native_type: r.native_type,
            cui,
            score: r.score,
        });
    }
    if !problems.is_empty() {
        return Err(Error::validation(summarize(&problems)));
    }
    Ok(out)
}

#[derive(Deserialize)]
struct OverrideRecord {
    source: String,
    native_type: String,
    group: String,
}

pub fn load_semantic_group_map(
    semgroups_path: impl AsRef<Path>,
    overrides_path: Option<&Path>,
) -> Result<SemanticGroupMap> {
    let sg = semgroups_path.as_ref();
    let overrides = overrides_path.map(|p| read(p).map(|t| (t, p.to_path_buf()))).transpose()?;
    parse_semantic_group_map(
        &read(sg)?,
        sg,
        overrides.as_ref().map(|(t, p)| (t.as_str(), p.as_path())),
    )
}

pub fn parse_semantic_group_map(
    semgroups: &str,
    origin: &Path,
    overrides: Option<(&str, &Path)>,
) -> Result<SemanticGroupMap> {
    let mut map = SemanticGroupMap::default();
    let mut abbrevs: BTreeMap<String, String> = BTreeMap::new();
    for (i, raw) in semgroups.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('|').collect();
        if cols.len() != 4 {
            return Err(Error::ParseLine {
                path: origin.to_path_buf(),
                line: i + 1,
                message: format!("expected 4 '|'-separated fields, found {}", cols.len()),
            });
        }
        let (abbr, group, tui) = (cols[0], cols[1], cols[2]);
        map.add_group(group);
        abbrevs.insert(abbr.to_string(), group.to_string());
        map.tui_to_group.insert(tui.to_string(), group.to_string());
    }
    map.abbreviations = abbrevs;
    if let Some((text, path)) = overrides {
        for (line, r) in json_lines::<OverrideRecord>(text, path)? {
            let Some(group) = map.resolve_group_label(&r.group).map(str::to_string) else {
                return Err(Error::validation(format!(
                    "{}:{line}: override targets unknown group {:?}",
                    path.display(),
                    r.group
                )));
            };
            map.native_to_group.insert((r.source, r.native_type), group);
        }
    }
    Ok(map)
}

/// Annotations after group mapping plus a per-source tally of dropped records.
#[derive(Debug, Clone, Default)]
pub struct MappedAnnotations {
    pub annotations: Vec<Annotation>,
    pub dropped: BTreeMap<String, usize>,
}

/// Assigns every annotation a group.
///
/// Precedence: an explicit `group` (full name or abbreviation) already on the
/// record, then the source-specific override for `native_type`, then the TUI
/// table. Records with no resolvable group are dropped and tallied.
pub fn apply_group_mapping(annotations: Vec<Annotation>, map: &SemanticGroupMap) -> MappedAnnotations {
    let mut out = MappedAnnotations::default();
    for mut a in annotations {
        let group = a
            .group
            .as_deref()
            .and_then(|g| map.resolve_group_label(g))
            .or_else(|| {
                a.native_type
                    .as_deref()
                    .and_then(|t| map.group_for(&a.source, t))
            })
            .map(str::to_string);
        match group {
            Some(g) => {
                a.group = Some(g);
                out.annotations.push(a);
            }
            None => *out.dropped.entry(a.source).or_default() += 1,
        }
    }
    out
}

/// Overlap resolution rules: longest span, then highest score (absent scores
/// rank lowest), then a seeded uniform choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DisambiguationPolicy {
    pub seed: u64,
}

impl DisambiguationPolicy {
    pub fn new(seed: u64) -> Self {
        DisambiguationPolicy { seed }
    }
}

/// Resolves overlapping spans of one `(source, doc)` slice, independently per
/// group. Clusters of transitively overlapping spans are handled left to
/// right; within a cluster the best span is kept, every span overlapping it
/// is removed, and the survivors are clustered again.
pub fn disambiguate_overlaps(annotations: &[Annotation], policy: &DisambiguationPolicy) -> Vec<Annotation> {
    let mut by_group: BTreeMap<Option<&str>, Vec<&Annotation>> = BTreeMap::new();
    for a in annotations {
        by_group.entry(a.group.as_deref()).or_default().push(a);
    }
    let mut out = Vec::with_capacity(annotations.len());
    for (_, mut spans) in by_group {
        spans.sort_by(|a, b| span_order(a, b));
        resolve(&spans, policy, &mut out);
    }
    out.sort_by(span_order);
    out
}

fn span_order(a: &Annotation, b: &Annotation) -> Ordering {
    (a.begin, a.end, &a.cui, &a.native_type)
        .cmp(&(b.begin, b.end, &b.cui, &b.native_type))
        .then_with(|| a.score.partial_cmp(&b.score).unwrap_or(Ordering::Equal))
}

fn resolve(sorted: &[&Annotation], policy: &DisambiguationPolicy, out: &mut Vec<Annotation>) {
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        let mut reach = sorted[i].end;
        while j < sorted.len() && sorted[j].begin < reach {
            reach = reach.max(sorted[j].end);
            j += 1;
        }
        let cluster = &sorted[i..j];
        if cluster.len() == 1 {
            out.push(cluster[0].clone());
        } else {
            let w = winner(cluster, policy);
            let survivors: Vec<&Annotation> = cluster
                .iter()
                .enumerate()
                .filter(|(k, a)| *k != w && !a.overlaps(cluster[w]))
                .map(|(_, a)| *a)
                .collect();
            out.push(cluster[w].clone());
            resolve(&survivors, policy, out);
        }
        i = j;
    }
}

fn rank(a: &Annotation, b: &Annotation) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| match (a.score, b.score) {
        (Some(x), Some(y)) => x.partial_cmp(&y).unwrap_or(Ordering::Equal),
        (Some(_), None) => Ordering::Greater,
        (None, Some(_)) => Ordering::Less,
        (None, None) => Ordering::Equal,
    })
}

fn winner(cluster: &[&Annotation], policy: &DisambiguationPolicy) -> usize {
    let best = cluster
        .iter()
        .copied()
        .max_by(|a, b| rank(a, b))
        .expect("nonempty cluster");
    let tied: Vec<usize> = (0..cluster.len())
        .filter(|&k| rank(cluster[k], best) == Ordering::Equal)
        .collect();
    if tied.len() == 1 {
        return tied[0];
    }
    let a = cluster[0];
    let s = seed::derive(
        policy.seed,
        &[seed::hash_str(&a.source), seed::hash_str(&a.doc_id), a.begin as u64],
    );
    tied[seed::pick(s, tied.len())]
}

/// Store with every non-`gold` source disambiguated.
pub fn disambiguate_store(store: &AnnotationStore, gold_source: &str, policy: &DisambiguationPolicy) -> AnnotationStore {
    store.map_slices(|s| s == gold_source, |_, _, v| disambiguate_overlaps(v, policy))
}

/// Files that make up one corpus.
#[derive(Debug, Clone)]
pub struct CorpusInputs {
    pub manifest: PathBuf,
    pub gold: PathBuf,
    pub gold_source: String,
    /// `(source name, annotation file)` pairs.
    pub systems: Vec<(String, PathBuf)>,
    pub semgroups: PathBuf,
    pub overrides: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct IngestedCorpus {
    pub store: AnnotationStore,
    pub group_map: SemanticGroupMap,
    pub dropped: BTreeMap<String, usize>,
}

/// Full ingest pipeline: manifest, group map, annotation files, mapping, and
/// disambiguation of system sources. Gold spans are kept as-is; overlapping
/// gold spans merge when masks are built.
pub fn ingest_corpus(inputs: &CorpusInputs, policy: &DisambiguationPolicy) -> Result<IngestedCorpus> {
    let docs = load_corpus_manifest(&inputs.manifest)?;
    let group_map = load_semantic_group_map(&inputs.semgroups, inputs.overrides.as_deref())?;
    let mut all = load_annotations(&inputs.gold, Some(&inputs.gold_source), &docs)?;
    for (name, path) in &inputs.systems {
        if name == &inputs.gold_source {
            return Err(Error::config(format!("system {name:?} shares the gold source name")));
        }
        all.extend(load_annotations(path, Some(name), &docs)?);
    }
    let mapped = apply_group_mapping(all, &group_map);
    let store = AnnotationStore::new(docs, mapped.annotations, group_map.group_universe.clone())?;
    let store = disambiguate_store(&store, &inputs.gold_source, policy);
    Ok(IngestedCorpus {
        store,
        group_map,
        dropped: mapped.dropped,
    })
}
