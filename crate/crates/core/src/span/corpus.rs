use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{AnnotationStore, GroupFilter};
use crate::seed;

use super::mask::{clear_tail, majority_words, set_range, words_for, CharMask, SetAlgebra};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocSlot {
    pub doc_id: String,
    pub len: usize,
    pub word_offset: usize,
}

/// Word-aligned placement of every document of a corpus in one bit vector.
/// Documents are ordered by `doc_id`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusLayout {
    docs: Vec<DocSlot>,
    index: BTreeMap<String, usize>,
    total_words: usize,
}

impl CorpusLayout {
    pub fn new<I, S>(docs: I) -> Result<Arc<Self>>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut sorted: Vec<(String, usize)> = docs.into_iter().map(|(d, l)| (d.into(), l)).collect();
        sorted.sort();
        let mut slots = Vec::with_capacity(sorted.len());
        let mut index = BTreeMap::new();
        let mut offset = 0;
        for (doc_id, len) in sorted {
            if index.insert(doc_id.clone(), slots.len()).is_some() {
                return Err(Error::validation(format!("duplicate doc_id {doc_id:?}")));
            }
            slots.push(DocSlot {
                doc_id,
                len,
                word_offset: offset,
            });
            offset += words_for(len);
        }
        Ok(Arc::new(CorpusLayout {
            docs: slots,
            index,
            total_words: offset,
        }))
    }

    pub fn from_store(store: &AnnotationStore) -> Arc<Self> {
        CorpusLayout::new(store.documents().map(|d| (d.doc_id.clone(), d.length)))
            .expect("store document ids are unique")
    }

    pub fn docs(&self) -> &[DocSlot] {
        &self.docs
    }

    pub fn slot(&self, doc_id: &str) -> Option<&DocSlot> {
        self.index.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn total_chars(&self) -> usize {
        self.docs.iter().map(|d| d.len).sum()
    }
}

/// Characters of a whole corpus as one bitset, laid out per [`CorpusLayout`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusMask {
    layout: Arc<CorpusLayout>,
    words: Vec<u64>,
}

impl CorpusMask {
    pub fn empty(layout: Arc<CorpusLayout>) -> Self {
        let words = vec![0; layout.total_words];
        CorpusMask { layout, words }
    }

    /// Mask of `source`'s annotations matching `filter` over every document of
    /// the layout.
    pub fn from_source(
        layout: &Arc<CorpusLayout>,
        store: &AnnotationStore,
        source: &str,
        filter: &GroupFilter,
    ) -> Self {
        let mut m = CorpusMask::empty(layout.clone());
        for slot in &layout.docs {
            let words = &mut m.words[slot.word_offset..slot.word_offset + words_for(slot.len)];
            for a in store.slice(source, &slot.doc_id) {
                if filter.matches(a.group.as_deref()) {
                    set_range(words, a.begin, a.end.min(slot.len));
                }
            }
        }
        m
    }

    /// Assembles per-document masks. Missing documents are empty; a mask for
    /// an unknown document or with the wrong length is an error.
    pub fn from_doc_masks<'a, I>(layout: &Arc<CorpusLayout>, masks: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a CharMask>,
    {
        let mut m = CorpusMask::empty(layout.clone());
        for dm in masks {
            let slot = layout
                .slot(dm.doc_id())
                .ok_or_else(|| Error::validation(format!("unknown document {:?}", dm.doc_id())))?;
            if slot.len != dm.len() {
                return Err(Error::validation(format!(
                    "mask for {:?} has length {}, document has {}",
                    dm.doc_id(),
                    dm.len(),
                    slot.len
                )));
            }
            m.words[slot.word_offset..slot.word_offset + dm.words().len()].copy_from_slice(dm.words());
        }
        Ok(m)
    }

    pub fn layout(&self) -> &Arc<CorpusLayout> {
        &self.layout
    }

    pub fn doc_mask(&self, doc_id: &str) -> Option<CharMask> {
        self.layout.slot(doc_id).map(|s| self.slot_mask(s))
    }

    pub fn doc_masks(&self) -> impl Iterator<Item = CharMask> + '_ {
        self.layout.docs.iter().map(|s| self.slot_mask(s))
    }

    fn slot_mask(&self, s: &DocSlot) -> CharMask {
        let w = self.words[s.word_offset..s.word_offset + words_for(s.len)].to_vec();
        CharMask::from_words(s.doc_id.clone(), s.len, w)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn check_compatible(&self, other: &CorpusMask) -> Result<()> {
        if Arc::ptr_eq(&self.layout, &other.layout) || self.layout == other.layout {
            Ok(())
        } else {
            Err(Error::validation("corpus masks cover different document sets"))
        }
    }

    pub fn is_subset(&self, other: &CorpusMask) -> bool {
        self.check_compatible(other).is_ok()
            && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn xor(&self, other: &CorpusMask) -> Result<CorpusMask> {
        self.zip(other, |a, b| a ^ b)
    }

    pub(crate) fn zip(&self, other: &CorpusMask, f: impl Fn(u64, u64) -> u64) -> Result<CorpusMask> {
        self.check_compatible(other)?;
        let words = self.words.iter().zip(&other.words).map(|(a, b)| f(*a, *b)).collect();
        Ok(CorpusMask {
            layout: self.layout.clone(),
            words,
        })
    }

    /// Per-document [`super::majority_vote`] over the whole corpus.
    pub fn majority(masks: &[&CorpusMask], seed: u64) -> Result<CorpusMask> {
        if masks.len() < 2 {
            return Err(Error::validation(format!(
                "majority vote needs at least 2 masks, got {}",
                masks.len()
            )));
        }
        for m in &masks[1..] {
            masks[0].check_compatible(m)?;
        }
        let layout = masks[0].layout.clone();
        let mut out = CorpusMask::empty(layout.clone());
        for s in &layout.docs {
            let range = s.word_offset..s.word_offset + words_for(s.len);
            let slices: Vec<&[u64]> = masks.iter().map(|m| &m.words[range.clone()]).collect();
            let doc_hash = seed::hash_str(&s.doc_id);
            let w = majority_words(&slices, s.len, 0, |idx| {
                seed::derive(seed, &[doc_hash, idx as u64]) & 1 == 1
            });
            out.words[range].copy_from_slice(&w);
        }
        Ok(out)
    }

    pub fn complement(&self) -> CorpusMask {
        let mut out = CorpusMask {
            layout: self.layout.clone(),
            words: self.words.iter().map(|w| !w).collect(),
        };
        for s in &self.layout.docs {
            clear_tail(&mut out.words[s.word_offset..s.word_offset + words_for(s.len)], s.len);
        }
        out
    }
}

impl SetAlgebra for CorpusMask {
    fn union(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a | b)
    }

    fn intersect(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a & b)
    }
}
