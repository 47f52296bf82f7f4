//! Character-level and CUI-level scoring with Bernoulli confidence intervals.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Cui;
use crate::span::{CorpusMask, CuiMask};

/// Normal quantile for 95% intervals.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsResult {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub n_gold: u64,
    pub n_pred: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub ci_precision: (f64, f64),
    pub ci_recall: (f64, f64),
    pub ci_f1: (f64, f64),
    /// Set when `tp = 0`, so at least one of p, r, f1 fell back to the zero
    /// convention.
    pub degenerate: bool,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn interval(num: u64, den: u64, z: f64) -> (f64, f64) {
    if den == 0 {
        (0.0, 0.0)
    } else {
        bernoulli_ci(ratio(num, den), den, z).expect("n > 0 and p in [0, 1]")
    }
}

impl MetricsResult {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        Self::from_counts_z(tp, fp, fn_, Z95)
    }

    pub fn from_counts_z(tp: u64, fp: u64, fn_: u64, z: f64) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        // 2pr/(p+r) written over counts; identical value, no rounding drift
        let f1 = ratio(2 * tp, 2 * tp + fp + fn_);
        MetricsResult {
            tp,
            fp,
            fn_,
            n_gold: tp + fn_,
            n_pred: tp + fp,
            precision,
            recall,
            f1,
            ci_precision: interval(tp, tp + fp, z),
            ci_recall: interval(tp, tp + fn_, z),
            ci_f1: interval(2 * tp, 2 * tp + fp + fn_, z),
            degenerate: tp == 0,
        }
    }
}

/// Micro-averaged character confusion of `pred` against `gold`.
pub fn char_prf(gold: &CorpusMask, pred: &CorpusMask) -> Result<MetricsResult> {
    let (tp, fp, fn_) = confusion(gold, pred, None)?;
    Ok(MetricsResult::from_counts(tp, fp, fn_))
}

/// `(tp, fp, fn)` counted only inside `region` when given.
pub(crate) fn confusion(gold: &CorpusMask, pred: &CorpusMask, region: Option<&CorpusMask>) -> Result<(u64, u64, u64)> {
    gold.check_compatible(pred)?;
    if let Some(r) = region {
        gold.check_compatible(r)?;
    }
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    let g = gold.words();
    let p = pred.words();
    for i in 0..g.len() {
        let m = region.map_or(u64::MAX, |r| r.words()[i]);
        tp += (g[i] & p[i] & m).count_ones() as u64;
        fp += (!g[i] & p[i] & m).count_ones() as u64;
        fn_ += (g[i] & !p[i] & m).count_ones() as u64;
    }
    Ok((tp, fp, fn_))
}

/// Normal-approximation interval `p ± z·sqrt(p(1-p)/n)` clipped to `[0, 1]`.
pub fn bernoulli_ci(p: f64, n: u64, z: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::validation("confidence interval undefined for n = 0"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::validation(format!("proportion {p} outside [0, 1]")));
    }
    let half = z * (p * (1.0 - p) / n as f64).sqrt();
    Ok(((p - half).max(0.0), (p + half).min(1.0)))
}

/// True when the closed intervals are disjoint.
pub fn ci_overlap_significant(a: (f64, f64), b: (f64, f64)) -> bool {
    a.1 < b.0 || b.1 < a.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuiMetricsResult {
    pub per_label: BTreeMap<Cui, MetricsResult>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

impl CuiMetricsResult {
    fn from_tallies(tallies: BTreeMap<Cui, (u64, u64, u64)>) -> Self {
        let per_label: BTreeMap<Cui, MetricsResult> = tallies
            .into_iter()
            .map(|(c, (tp, fp, fn_))| (c, MetricsResult::from_counts(tp, fp, fn_)))
            .collect();
        let n = per_label.len() as f64;
        let mean = |f: fn(&MetricsResult) -> f64| {
            if per_label.is_empty() {
                0.0
            } else {
                per_label.values().map(f).sum::<f64>() / n
            }
        };
        CuiMetricsResult {
            macro_precision: mean(|m| m.precision),
            macro_recall: mean(|m| m.recall),
            macro_f1: mean(|m| m.f1),
            per_label,
        }
    }
}

fn check_same_docs<'a, A, B>(gold: impl Iterator<Item = &'a A>, pred: impl Iterator<Item = &'a B>) -> Result<()>
where
    A: AsRef<str> + ?Sized + 'a,
    B: AsRef<str> + ?Sized + 'a,
{
    let g: BTreeSet<&str> = gold.map(AsRef::as_ref).collect();
    let p: BTreeSet<&str> = pred.map(AsRef::as_ref).collect();
    if g != p {
        let diff: Vec<&str> = g.symmetric_difference(&p).copied().take(5).collect();
        return Err(Error::validation(format!("document sets differ (e.g. {diff:?})")));
    }
    Ok(())
}

/// Document-level multilabel CUI scoring.
pub fn doc_level_cui_prf(
    gold: &BTreeMap<String, BTreeSet<Cui>>,
    pred: &BTreeMap<String, BTreeSet<Cui>>,
) -> Result<CuiMetricsResult> {
    check_same_docs(gold.keys(), pred.keys())?;
    let mut t: BTreeMap<Cui, (u64, u64, u64)> = BTreeMap::new();
    for (doc, g) in gold {
        let p = &pred[doc];
        for c in g.union(p) {
            let e = t.entry(c.clone()).or_default();
            match (g.contains(c), p.contains(c)) {
                (true, true) => e.0 += 1,
                (false, true) => e.1 += 1,
                (true, false) => e.2 += 1,
                (false, false) => unreachable!(),
            }
        }
    }
    Ok(CuiMetricsResult::from_tallies(t))
}

/// Mention-level CUI scoring over per-character labels. Unlabeled characters
/// are OUTSIDE and never scored as a class.
pub fn mention_level_cui_prf(gold: &[CuiMask], pred: &[CuiMask]) -> Result<CuiMetricsResult> {
    check_same_docs(gold.iter().map(CuiMask::doc_id), pred.iter().map(CuiMask::doc_id))?;
    let pred_by_doc: BTreeMap<&str, &CuiMask> = pred.iter().map(|m| (m.doc_id(), m)).collect();
    let mut t: BTreeMap<Cui, (u64, u64, u64)> = BTreeMap::new();
    for g in gold {
        let p = pred_by_doc[g.doc_id()];
        if g.len() != p.len() {
            return Err(Error::validation(format!(
                "doc {}: gold length {} vs prediction length {}",
                g.doc_id(),
                g.len(),
                p.len()
            )));
        }
        for (begin, end, gl, pl) in aligned_segments(g, p) {
            let n = (end - begin) as u64;
            match (gl, pl) {
                (Some(a), Some(b)) if a == b => t.entry(a.clone()).or_default().0 += n,
                _ => {
                    if let Some(b) = pl {
                        t.entry(b.clone()).or_default().1 += n;
                    }
                    if let Some(a) = gl {
                        t.entry(a.clone()).or_default().2 += n;
                    }
                }
            }
        }
    }
    Ok(CuiMetricsResult::from_tallies(t))
}

type Segment<'a> = (usize, usize, Option<&'a Cui>, Option<&'a Cui>);

/// Maximal segments on which both masks carry a constant label, skipping
/// segments that are OUTSIDE in both.
fn aligned_segments<'a>(a: &'a CuiMask, b: &'a CuiMask) -> Vec<Segment<'a>> {
    let mut cuts: Vec<usize> = a
        .runs()
        .iter()
        .chain(b.runs())
        .flat_map(|r| [r.begin, r.end])
        .collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (la, lb) = (a.label_at(w[0]), b.label_at(w[0]));
        if la.is_some() || lb.is_some() {
            out.push((w[0], w[1], la, lb));
        }
    }
    out
}
