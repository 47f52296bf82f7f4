use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Annotation, Cui};
use crate::seed;

/// A run of characters carrying one concept label. `span_len` is the length
/// of the annotation the label came from and drives the longer-span
/// tie-break when layers are merged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CuiRun {
    pub begin: usize,
    pub end: usize,
    pub cui: Cui,
    pub span_len: usize,
}

/// Per-document concept labelling, stored as sorted non-overlapping runs.
/// Characters outside every run are OUTSIDE.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CuiMask {
    doc_id: String,
    len: usize,
    runs: Vec<CuiRun>,
}

impl CuiMask {
    pub fn empty(doc_id: impl Into<String>, len: usize) -> Self {
        CuiMask {
            doc_id: doc_id.into(),
            len,
            runs: Vec::new(),
        }
    }

    /// Builds a mask from runs that must be sorted, in bounds, and disjoint.
    pub fn from_runs(doc_id: impl Into<String>, len: usize, runs: Vec<CuiRun>) -> Result<Self> {
        let doc_id = doc_id.into();
        let mut prev_end = 0;
        for r in &runs {
            if r.begin >= r.end || r.end > len || r.begin < prev_end {
                return Err(Error::validation(format!(
                    "CUI run [{}, {}) invalid in doc {doc_id:?} of length {len}",
                    r.begin, r.end
                )));
            }
            prev_end = r.end;
        }
        Ok(CuiMask { doc_id, len, runs })
    }

    /// Single-span convenience used by fixtures: labels `[begin, end)` with `cui`.
    pub fn single(doc_id: impl Into<String>, len: usize, begin: usize, end: usize, cui: Cui) -> Result<Self> {
        CuiMask::from_runs(
            doc_id,
            len,
            vec![CuiRun {
                begin,
                end,
                cui,
                span_len: end - begin,
            }],
        )
    }

    /// Labels the CUI-bearing annotations of one source. Overlapping spans
    /// within the source are resolved like layers in [`merge_cui_layers`].
    pub fn from_annotations<'a, I>(doc_id: &str, len: usize, anns: I, seed: u64) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Annotation>,
    {
        let mut layers = Vec::new();
        for a in anns {
            if let Some(c) = &a.cui {
                if a.begin >= a.end || a.end > len {
                    return Err(Error::validation(format!(
                        "span [{}, {}) out of bounds for doc {doc_id:?}",
                        a.begin, a.end
                    )));
                }
                layers.push(CuiMask {
                    doc_id: doc_id.to_string(),
                    len,
                    runs: vec![CuiRun {
                        begin: a.begin,
                        end: a.end,
                        cui: c.clone(),
                        span_len: a.len(),
                    }],
                });
            }
        }
        layers.sort_by_key(|l| (l.runs[0].begin, l.runs[0].end));
        if layers.iter().map(|l| &l.runs[0]).collect::<Vec<_>>().windows(2).all(|w| w[0].end <= w[1].begin) {
            let runs = layers.into_iter().map(|mut l| l.runs.remove(0)).collect();
            return Ok(CuiMask {
                doc_id: doc_id.to_string(),
                len,
                runs,
            });
        }
        merge_cui_layers(doc_id, len, &layers, seed)
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn runs(&self) -> &[CuiRun] {
        &self.runs
    }

    pub fn label_at(&self, i: usize) -> Option<&Cui> {
        let idx = self.runs.partition_point(|r| r.end <= i);
        self.runs.get(idx).filter(|r| r.begin <= i).map(|r| &r.cui)
    }

    /// Distinct labels present in the mask.
    pub fn labels(&self) -> BTreeSet<&Cui> {
        self.runs.iter().map(|r| &r.cui).collect()
    }

    /// Label-only equality (ignores run fragmentation and span lengths).
    pub fn same_labels(&self, other: &CuiMask) -> bool {
        self.len == other.len && (0..self.len).all(|i| self.label_at(i) == other.label_at(i))
    }
}

/// Merges per-source CUI layers of one document into a single labelling.
///
/// For every character with at least one candidate: the CUI proposed by the
/// most layers wins; ties go to the CUI whose proposing span is longest;
/// remaining ties are broken by a seeded uniform choice per character.
pub fn merge_cui_layers(doc_id: &str, len: usize, layers: &[CuiMask], seed: u64) -> Result<CuiMask> {
    for l in layers {
        if l.doc_id != doc_id || l.len != len {
            return Err(Error::validation(format!(
                "CUI layer for {:?} (len {}) merged into {doc_id:?} (len {len})",
                l.doc_id, l.len
            )));
        }
    }
    let mut cuts: BTreeSet<usize> = BTreeSet::new();
    for l in layers {
        for r in &l.runs {
            cuts.insert(r.begin);
            cuts.insert(r.end);
        }
    }
    let cuts: Vec<usize> = cuts.into_iter().collect();
    let mut cursors = vec![0usize; layers.len()];
    let doc_hash = seed::hash_str(doc_id);
    let mut out: Vec<CuiRun> = Vec::new();

    for seg in cuts.windows(2) {
        let (b, e) = (seg[0], seg[1]);
        // votes and longest proposing span per candidate
        let mut tally: BTreeMap<&Cui, (usize, usize)> = BTreeMap::new();
        for (l, cur) in layers.iter().zip(cursors.iter_mut()) {
            while *cur < l.runs.len() && l.runs[*cur].end <= b {
                *cur += 1;
            }
            if let Some(r) = l.runs.get(*cur).filter(|r| r.begin <= b) {
                let t = tally.entry(&r.cui).or_default();
                t.0 += 1;
                t.1 = t.1.max(r.span_len);
            }
        }
        let Some(best) = tally.values().max().copied() else {
            continue;
        };
        let tied: Vec<&Cui> = tally
            .iter()
            .filter(|(_, v)| **v == best)
            .map(|(c, _)| *c)
            .collect();
        if tied.len() == 1 {
            push_run(&mut out, b, e, tied[0], best.1);
        } else {
            for i in b..e {
                let c = tied[seed::pick(seed::derive(seed, &[doc_hash, i as u64]), tied.len())];
                push_run(&mut out, i, i + 1, c, best.1);
            }
        }
    }
    Ok(CuiMask {
        doc_id: doc_id.to_string(),
        len,
        runs: out,
    })
}

fn push_run(out: &mut Vec<CuiRun>, begin: usize, end: usize, cui: &Cui, span_len: usize) {
    if let Some(last) = out.last_mut() {
        if last.end == begin && last.cui == *cui && last.span_len == span_len {
            last.end = end;
            return;
        }
    }
    out.push(CuiRun {
        begin,
        end,
        cui: cui.clone(),
        span_len,
    });
}
