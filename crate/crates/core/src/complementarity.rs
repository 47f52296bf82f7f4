//! Error sets and complementarity between systems.
//!
//! Follows the Brill and Wu complementary rate over character positions, plus
//! precision/recall/F1 of one system restricted to another's errors.

use crate::error::Result;
use crate::metrics::{confusion, MetricsResult};
use crate::span::{CorpusMask, SetAlgebra};

/// Character positions where a prediction disagrees with gold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorSet(CorpusMask);

impl ErrorSet {
    pub fn mask(&self) -> &CorpusMask {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Positions both systems got wrong.
    pub fn intersect(&self, other: &ErrorSet) -> Result<ErrorSet> {
        Ok(ErrorSet(self.0.intersect(&other.0)?))
    }
}

impl From<CorpusMask> for ErrorSet {
    fn from(m: CorpusMask) -> Self {
        ErrorSet(m)
    }
}

pub fn error_set(gold: &CorpusMask, pred: &CorpusMask) -> Result<ErrorSet> {
    Ok(ErrorSet(gold.xor(pred)?))
}

/// Percentage of A's errors that B does not share; 0 when A makes no errors.
pub fn comp_rate(errors_a: &ErrorSet, errors_b: &ErrorSet) -> Result<f64> {
    let a = errors_a.len();
    if a == 0 {
        errors_a.0.check_compatible(&errors_b.0)?;
        return Ok(0.0);
    }
    let both = errors_a.intersect(errors_b)?.len();
    Ok(100.0 * (1.0 - both as f64 / a as f64))
}

/// Scores `pred_b` against gold only on the positions `pred_a` got wrong.
/// An empty error set yields an all-zero result flagged `degenerate`.
pub fn comp_prf(gold: &CorpusMask, pred_a: &CorpusMask, pred_b: &CorpusMask) -> Result<MetricsResult> {
    let errors = error_set(gold, pred_a)?;
    let (tp, fp, fn_) = confusion(gold, pred_b, Some(&errors.0))?;
    Ok(MetricsResult::from_counts(tp, fp, fn_))
}

/// For each `k >= 1`, the comp rate of `candidate` against the best possible
/// combination of `pool[..k]`, whose errors are the positions every pool
/// member gets wrong.
pub fn marginal_comp_rates(pool: &[ErrorSet], candidate: &ErrorSet) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(pool.len());
    let mut common: Option<ErrorSet> = None;
    for e in pool {
        let next = match &common {
            None => e.clone(),
            Some(c) => c.intersect(e)?,
        };
        out.push(comp_rate(&next, candidate)?);
        common = Some(next);
    }
    Ok(out)
}
