use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Annotation;
use crate::seed;

/// Set operations shared by per-document and corpus-wide masks.
pub trait SetAlgebra: Sized {
    fn union(&self, other: &Self) -> Result<Self>;
    fn intersect(&self, other: &Self) -> Result<Self>;
}

pub(crate) fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

/// Per-document binary character vector: bit `i` is set iff character `i`
/// lies inside some annotation.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CharMask {
    doc_id: String,
    len: usize,
    words: Vec<u64>,
}

impl CharMask {
    pub fn empty(doc_id: impl Into<String>, len: usize) -> Self {
        CharMask {
            doc_id: doc_id.into(),
            len,
            words: vec![0; words_for(len)],
        }
    }

    /// Coverage mask of half-open spans. Overlapping spans are merged.
    pub fn from_spans<I>(doc_id: impl Into<String>, len: usize, spans: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut m = CharMask::empty(doc_id, len);
        for (b, e) in spans {
            if b > e || e > len {
                return Err(Error::validation(format!(
                    "span [{b}, {e}) out of bounds for doc {:?} of length {len}",
                    m.doc_id
                )));
            }
            set_range(&mut m.words, b, e);
        }
        Ok(m)
    }

    pub fn from_annotations<'a, I>(doc_id: impl Into<String>, len: usize, anns: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Annotation>,
    {
        CharMask::from_spans(doc_id, len, anns.into_iter().map(|a| (a.begin, a.end)))
    }

    /// Parses a `0`/`1` string, mostly for tests and fixtures.
    pub fn from_bits(doc_id: impl Into<String>, bits: &str) -> Result<Self> {
        let mut m = CharMask::empty(doc_id, bits.len());
        for (i, c) in bits.bytes().enumerate() {
            match c {
                b'1' => m.set(i, true),
                b'0' => {}
                _ => return Err(Error::validation(format!("bad bit {:?}", c as char))),
            }
        }
        Ok(m)
    }

    pub(crate) fn from_words(doc_id: String, len: usize, words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), words_for(len));
        CharMask { doc_id, len, words }
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

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "index {i} out of range");
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        assert!(i < self.len, "index {i} out of range");
        let bit = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= bit;
        } else {
            self.words[i / 64] &= !bit;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn to_bits(&self) -> String {
        (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }

    /// Maximal runs of set bits as sorted, pairwise non-adjacent half-open spans.
    pub fn to_spans(&self) -> Vec<(usize, usize)> {
        runs(&self.words, self.len)
    }

    pub fn is_subset(&self, other: &CharMask) -> bool {
        self.len == other.len && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn xor(&self, other: &CharMask) -> Result<CharMask> {
        self.zip(other, |a, b| a ^ b)
    }

    pub fn complement(&self) -> CharMask {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        clear_tail(&mut words, self.len);
        CharMask::from_words(self.doc_id.clone(), self.len, words)
    }

    fn check_compatible(&self, other: &CharMask) -> Result<()> {
        if self.doc_id != other.doc_id || self.len != other.len {
            return Err(Error::validation(format!(
                "mask mismatch: {:?} (len {}) vs {:?} (len {})",
                self.doc_id, self.len, other.doc_id, other.len
            )));
        }
        Ok(())
    }

    fn zip(&self, other: &CharMask, f: impl Fn(u64, u64) -> u64) -> Result<CharMask> {
        self.check_compatible(other)?;
        let words = self.words.iter().zip(&other.words).map(|(a, b)| f(*a, *b)).collect();
        Ok(CharMask::from_words(self.doc_id.clone(), self.len, words))
    }
}

impl SetAlgebra for CharMask {
    fn union(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a | b)
    }

    fn intersect(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a & b)
    }
}

impl fmt::Debug for CharMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 128 {
            write!(f, "CharMask({:?}, {})", self.doc_id, self.to_bits())
        } else {
            write!(
                f,
                "CharMask({:?}, len {}, {} set)",
                self.doc_id,
                self.len,
                self.count_ones()
            )
        }
    }
}

/// Per-character majority over `k >= 2` masks of one document.
///
/// A character is set when more than half the masks cover it. On an exact
/// tie (only possible for even `k`) the bit is drawn from a seed derived from
/// `(seed, doc_id, index)`.
pub fn majority_vote(masks: &[&CharMask], seed: u64) -> Result<CharMask> {
    if masks.len() < 2 {
        return Err(Error::validation(format!(
            "majority vote needs at least 2 masks, got {}",
            masks.len()
        )));
    }
    for m in &masks[1..] {
        masks[0].check_compatible(m)?;
    }
    let doc_hash = seed::hash_str(&masks[0].doc_id);
    let words: Vec<&[u64]> = masks.iter().map(|m| m.words.as_slice()).collect();
    let out = majority_words(&words, masks[0].len, 0, |idx| {
        seed::derive(seed, &[doc_hash, idx as u64]) & 1 == 1
    });
    Ok(CharMask::from_words(masks[0].doc_id.clone(), masks[0].len, out))
}

/// Word-level majority kernel. `bit_base` offsets the character index passed
/// to `tie` so corpus masks can reuse it per document.
pub(crate) fn majority_words(
    masks: &[&[u64]],
    len: usize,
    bit_base: usize,
    tie: impl Fn(usize) -> bool,
) -> Vec<u64> {
    let k = masks.len();
    let n_words = words_for(len);
    let mut out = vec![0u64; n_words];
    for (w, slot) in out.iter_mut().enumerate() {
        let any = masks.iter().fold(0u64, |acc, m| acc | m[w]);
        if any == 0 {
            continue;
        }
        let mut bits = any;
        while bits != 0 {
            let b = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let votes = masks.iter().filter(|m| m[w] >> b & 1 == 1).count();
            let set = if 2 * votes > k {
                true
            } else if 2 * votes == k {
                tie(bit_base + w * 64 + b)
            } else {
                false
            };
            if set {
                *slot |= 1 << b;
            }
        }
    }
    clear_tail(&mut out, len);
    out
}

pub(crate) fn set_range(words: &mut [u64], begin: usize, end: usize) {
    let mut i = begin;
    while i < end {
        let w = i / 64;
        let lo = i % 64;
        let hi = (end - w * 64).min(64);
        let mask = if hi - lo == 64 {
            u64::MAX
        } else {
            ((1u64 << (hi - lo)) - 1) << lo
        };
        words[w] |= mask;
        i = w * 64 + hi;
    }
}

pub(crate) fn clear_tail(words: &mut [u64], len: usize) {
    if !len.is_multiple_of(64) {
        if let Some(last) = words.last_mut() {
            *last &= (1u64 << (len % 64)) - 1;
        }
    }
}

pub(crate) fn runs(words: &[u64], len: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..len {
        let on = words[i / 64] >> (i % 64) & 1 == 1;
        match (on, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, len));
    }
    out
}
