//! Shared data model: documents, annotations, semantic groups, and the
//! validated annotation store every other module reads from.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Display label for the unfiltered collection of annotations.
pub const ALL_GROUPS: &str = "All groups";

/// A document in a corpus. Annotations reference it by `doc_id`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRef {
    pub doc_id: String,
    /// Character count of the plain-text note.
    pub length: usize,
    pub corpus_id: String,
}

/// UMLS concept identifier: `C` followed by seven digits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Cui(String);

impl Cui {
    pub fn new(s: impl Into<String>) -> Result<Self> {
        let s = s.into();
        let b = s.as_bytes();
        if b.len() == 8 && b[0] == b'C' && b[1..].iter().all(u8::is_ascii_digit) {
            Ok(Cui(s))
        } else {
            Err(Error::validation(format!("malformed CUI {s:?}")))
        }
    }

    /// Builds `C` + zero-padded number. Panics if `n` needs more than seven digits.
    pub fn from_number(n: u32) -> Self {
        assert!(n < 10_000_000, "CUI number out of range");
        Cui(format!("C{n:07}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Cui {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Cui::new(s)
    }
}

impl From<Cui> for String {
    fn from(c: Cui) -> String {
        c.0
    }
}

impl fmt::Display for Cui {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One labeled character span from one source, half-open `[begin, end)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub doc_id: String,
    pub source: String,
    pub begin: usize,
    pub end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub native_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cui: Option<Cui>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl Annotation {
    pub fn len(&self) -> usize {
        self.end - self.begin
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.begin
    }

    pub fn overlaps(&self, other: &Annotation) -> bool {
        self.begin < other.end && other.begin < self.end
    }
}

/// Group restriction applied before scoring. `All` is the absence of filtering.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum GroupFilter {
    All,
    Group(String),
}

impl GroupFilter {
    pub fn label(&self) -> &str {
        match self {
            GroupFilter::All => ALL_GROUPS,
            GroupFilter::Group(g) => g,
        }
    }

    pub fn matches(&self, group: Option<&str>) -> bool {
        match self {
            GroupFilter::All => true,
            GroupFilter::Group(g) => group == Some(g.as_str()),
        }
    }
}

impl FromStr for GroupFilter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.is_empty() {
            return Err(Error::config("empty group label"));
        }
        if t.eq_ignore_ascii_case("all") || t == ALL_GROUPS {
            Ok(GroupFilter::All)
        } else {
            Ok(GroupFilter::Group(t.to_string()))
        }
    }
}

impl TryFrom<String> for GroupFilter {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GroupFilter> for String {
    fn from(g: GroupFilter) -> String {
        g.label().to_string()
    }
}

impl fmt::Display for GroupFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Semantic type to semantic group mapping.
///
/// `native_to_group` holds source-specific categories and takes precedence
/// over the generic TUI table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SemanticGroupMap {
    pub tui_to_group: BTreeMap<String, String>,
    pub native_to_group: BTreeMap<(String, String), String>,
    pub group_universe: Vec<String>,
    /// Group abbreviation (`DISO`) to full name (`Disorders`).
    pub abbreviations: BTreeMap<String, String>,
}

impl SemanticGroupMap {
    pub fn contains_group(&self, group: &str) -> bool {
        self.group_universe.iter().any(|g| g == group)
    }

    /// Resolves the group for a `(source, native_type)` pair.
    pub fn group_for(&self, source: &str, native_type: &str) -> Option<&str> {
        self.native_to_group
            .get(&(source.to_string(), native_type.to_string()))
            .or_else(|| self.tui_to_group.get(native_type))
            .map(String::as_str)
    }

    /// Canonical group name for a full name or abbreviation in the universe.
    pub fn resolve_group_label<'a>(&'a self, label: &'a str) -> Option<&'a str> {
        if self.contains_group(label) {
            Some(label)
        } else {
            self.abbreviations.get(label).map(String::as_str)
        }
    }

    pub(crate) fn add_group(&mut self, group: &str) {
        if !self.contains_group(group) {
            self.group_universe.push(group.to_string());
        }
    }
}

/// Immutable, validated annotation collection indexed by source then document.
///
/// Each per-(source, doc) slice is sorted by `(begin, end)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationStore {
    documents: BTreeMap<String, DocumentRef>,
    by_source: BTreeMap<String, BTreeMap<String, Vec<Annotation>>>,
    group_universe: Vec<String>,
}

impl AnnotationStore {
    /// Validates and indexes. Every annotation must reference a known document,
    /// satisfy `0 <= begin < end <= length`, and carry a group from the universe
    /// (or none).
    pub fn new(
        documents: Vec<DocumentRef>,
        annotations: Vec<Annotation>,
        group_universe: Vec<String>,
    ) -> Result<Self> {
        let mut docs = BTreeMap::new();
        for d in documents {
            if let Some(prev) = docs.insert(d.doc_id.clone(), d) {
                return Err(Error::validation(format!(
                    "duplicate doc_id {:?}",
                    prev.doc_id
                )));
            }
        }
        let universe: BTreeSet<&str> = group_universe.iter().map(String::as_str).collect();
        let mut problems = Vec::new();
        let mut by_source: BTreeMap<String, BTreeMap<String, Vec<Annotation>>> = BTreeMap::new();
        for a in annotations {
            match docs.get(&a.doc_id) {
                None => problems.push(format!("{}: unknown doc_id {:?}", a.source, a.doc_id)),
                Some(d) if a.begin >= a.end || a.end > d.length => problems.push(format!(
                    "{}: span [{}, {}) invalid for doc {:?} of length {}",
                    a.source, a.begin, a.end, a.doc_id, d.length
                )),
                Some(_) => match &a.group {
                    Some(g) if !universe.contains(g.as_str()) => {
                        problems.push(format!("{}: group {g:?} not in universe", a.source))
                    }
                    _ => by_source
                        .entry(a.source.clone())
                        .or_default()
                        .entry(a.doc_id.clone())
                        .or_default()
                        .push(a),
                },
            }
        }
        if !problems.is_empty() {
            return Err(Error::validation(summarize(&problems)));
        }
        for docs in by_source.values_mut() {
            for v in docs.values_mut() {
                sort_spans(v);
            }
        }
        Ok(AnnotationStore {
            documents: docs,
            by_source,
            group_universe,
        })
    }

    pub fn documents(&self) -> impl Iterator<Item = &DocumentRef> {
        self.documents.values()
    }

    pub fn document(&self, doc_id: &str) -> Option<&DocumentRef> {
        self.documents.get(doc_id)
    }

    pub fn num_documents(&self) -> usize {
        self.documents.len()
    }

    pub fn group_universe(&self) -> &[String] {
        &self.group_universe
    }

    pub fn sources(&self) -> impl Iterator<Item = &str> {
        self.by_source.keys().map(String::as_str)
    }

    pub fn has_source(&self, source: &str) -> bool {
        self.by_source.contains_key(source)
    }

    /// Corpus label: the distinct `corpus_id`s joined with `+`.
    pub fn corpus_name(&self) -> String {
        let ids: BTreeSet<&str> = self.documents.values().map(|d| d.corpus_id.as_str()).collect();
        ids.into_iter().collect::<Vec<_>>().join("+")
    }

    /// The sorted spans of one `(source, doc)` slice, across all groups.
    pub fn slice(&self, source: &str, doc_id: &str) -> &[Annotation] {
        self.by_source
            .get(source)
            .and_then(|m| m.get(doc_id))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn annotations(&self) -> impl Iterator<Item = &Annotation> {
        self.by_source.values().flat_map(|m| m.values().flatten())
    }

    pub fn source_annotations<'a>(&'a self, source: &str) -> impl Iterator<Item = &'a Annotation> + 'a {
        self.by_source
            .get(source)
            .into_iter()
            .flat_map(|m| m.values().flatten())
    }

    pub fn len(&self) -> usize {
        self.annotations().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether `source` has at least one annotation in `group`.
    pub fn source_has_group(&self, source: &str, group: &str) -> bool {
        self.source_annotations(source)
            .any(|a| a.group.as_deref() == Some(group))
    }

    pub fn check_filter(&self, filter: &GroupFilter) -> Result<()> {
        match filter {
            GroupFilter::All => Ok(()),
            GroupFilter::Group(g) if self.group_universe.contains(g) => Ok(()),
            GroupFilter::Group(g) => Err(Error::config(format!(
                "unknown semantic group {g:?}; known: {}",
                self.group_universe.join(", ")
            ))),
        }
    }

    /// Restricts annotations to one group. The document set is unchanged.
    pub fn filter_by_group(&self, filter: &GroupFilter) -> Result<AnnotationStore> {
        self.check_filter(filter)?;
        if *filter == GroupFilter::All {
            return Ok(self.clone());
        }
        let by_source = self
            .by_source
            .iter()
            .map(|(s, docs)| {
                let docs = docs
                    .iter()
                    .map(|(d, v)| {
                        let kept: Vec<_> = v
                            .iter()
                            .filter(|a| filter.matches(a.group.as_deref()))
                            .cloned()
                            .collect();
                        (d.clone(), kept)
                    })
                    .filter(|(_, v)| !v.is_empty())
                    .collect();
                (s.clone(), docs)
            })
            .collect();
        Ok(AnnotationStore {
            documents: self.documents.clone(),
            by_source,
            group_universe: self.group_universe.clone(),
        })
    }

    /// Rebuilds the store with one source's annotations replaced by `f(slice)`
    /// for every document. Used by disambiguation; `f` may only select.
    pub(crate) fn map_slices<F>(&self, mut skip: impl FnMut(&str) -> bool, mut f: F) -> Self
    where
        F: FnMut(&str, &str, &[Annotation]) -> Vec<Annotation>,
    {
        let by_source = self
            .by_source
            .iter()
            .map(|(s, docs)| {
                let docs = if skip(s) {
                    docs.clone()
                } else {
                    docs.iter()
                        .map(|(d, v)| {
                            let mut out = f(s, d, v);
                            sort_spans(&mut out);
                            (d.clone(), out)
                        })
                        .collect()
                };
                (s.clone(), docs)
            })
            .collect();
        AnnotationStore {
            documents: self.documents.clone(),
            by_source,
            group_universe: self.group_universe.clone(),
        }
    }

    /// True when some `(source, doc, group)` slice has two overlapping spans.
    pub fn has_overlaps(&self, source: &str) -> bool {
        self.by_source.get(source).is_some_and(|docs| {
            docs.values().any(|v| {
                let mut by_group: BTreeMap<Option<&str>, Vec<&Annotation>> = BTreeMap::new();
                for a in v {
                    by_group.entry(a.group.as_deref()).or_default().push(a);
                }
                by_group
                    .values()
                    .any(|g| g.windows(2).any(|w| w[0].end > w[1].begin))
            })
        })
    }
}

fn sort_spans(v: &mut [Annotation]) {
    v.sort_by(|a, b| {
        (a.begin, a.end, &a.group, &a.cui)
            .partial_cmp(&(b.begin, b.end, &b.group, &b.cui))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
}

pub(crate) fn summarize(problems: &[String]) -> String {
    const SHOWN: usize = 10;
    let mut msg = problems
        .iter()
        .take(SHOWN)
        .cloned()
        .collect::<Vec<_>>()
        .join("; ");
    if problems.len() > SHOWN {
        msg.push_str(&format!("; and {} more", problems.len() - SHOWN));
    }
    msg
}
