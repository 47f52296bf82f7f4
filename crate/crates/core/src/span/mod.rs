//! Character-mask representation of annotation sets and the set operations
//! Boolean ensembles are built from.

mod corpus;
mod cui;
mod mask;

pub use corpus::{CorpusLayout, CorpusMask, DocSlot};
pub use cui::{merge_cui_layers, CuiMask, CuiRun};
pub use mask::{majority_vote, CharMask, SetAlgebra};
