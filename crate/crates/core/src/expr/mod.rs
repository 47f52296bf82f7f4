//! Boolean combination ensembles: grammar, parse trees, truth-table
//! signatures, enumeration, and sampling.

mod enumerate;
mod parse;
mod sample;
mod signature;
mod tree;

pub use enumerate::{
    enumerate_ensembles, left_deep_count, semantic_count, semantic_space_size, syntactic_count,
    EnumerationMode,
};
pub use parse::{parse, ExprParser};
pub use sample::EnsembleSampler;
pub use signature::{
    truth_table_signature, truth_table_signature_with_limit, ExprSignature, DEFAULT_MAX_LEAVES,
};
pub use tree::{ExprTree, Op};
