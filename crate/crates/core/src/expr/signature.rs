use std::fmt;

use super::tree::ExprTree;
use crate::error::{Error, Result};

/// Default cap on leaves for truth-table signatures (2^12 rows).
pub const DEFAULT_MAX_LEAVES: usize = 12;

/// Semantic identity of a read-once expression: its sorted leaf set and the
/// truth table over all `2^k` assignments.
///
/// Row `i` assigns leaf `j` (in sorted order) the bit `(i >> (k - 1 - j)) & 1`,
/// so for two leaves rows run `00, 01, 10, 11`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExprSignature {
    leaves: Vec<String>,
    table: Vec<u64>,
}

impl ExprSignature {
    pub fn leaves(&self) -> &[String] {
        &self.leaves
    }

    pub fn rows(&self) -> usize {
        1 << self.leaves.len()
    }

    pub fn row(&self, i: usize) -> bool {
        self.table[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn table_bits(&self) -> String {
        (0..self.rows()).map(|i| if self.row(i) { '1' } else { '0' }).collect()
    }
}

impl fmt::Debug for ExprSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExprSignature({:?}, {})", self.leaves, self.table_bits())
    }
}

pub fn truth_table_signature(tree: &ExprTree) -> Result<ExprSignature> {
    truth_table_signature_with_limit(tree, DEFAULT_MAX_LEAVES)
}

pub fn truth_table_signature_with_limit(tree: &ExprTree, max_leaves: usize) -> Result<ExprSignature> {
    let mut leaves: Vec<String> = tree.leaves().into_iter().map(String::from).collect();
    leaves.sort();
    leaves.dedup();
    let k = leaves.len();
    if k > max_leaves {
        return Err(Error::validation(format!(
            "expression has {k} leaves; signature limit is {max_leaves}"
        )));
    }
    let rows = 1usize << k;
    let n_words = rows.div_ceil(64);
    // column j: rows in which leaf j is true
    let columns: Vec<Vec<u64>> = (0..k)
        .map(|j| {
            let mut w = vec![0u64; n_words];
            for i in 0..rows {
                if (i >> (k - 1 - j)) & 1 == 1 {
                    w[i / 64] |= 1 << (i % 64);
                }
            }
            w
        })
        .collect();
    let table = eval_columns(tree, &leaves, &columns);
    Ok(ExprSignature { leaves, table })
}

fn eval_columns(tree: &ExprTree, leaves: &[String], columns: &[Vec<u64>]) -> Vec<u64> {
    match tree {
        ExprTree::Leaf(s) => {
            let j = leaves.binary_search(s).expect("leaf collected above");
            columns[j].clone()
        }
        ExprTree::And(l, r) => {
            let (a, b) = (eval_columns(l, leaves, columns), eval_columns(r, leaves, columns));
            a.iter().zip(&b).map(|(x, y)| x & y).collect()
        }
        ExprTree::Or(l, r) => {
            let (a, b) = (eval_columns(l, leaves, columns), eval_columns(r, leaves, columns));
            a.iter().zip(&b).map(|(x, y)| x | y).collect()
        }
    }
}
