use std::fmt;

use crate::error::{Error, Result};
use crate::span::SetAlgebra;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Op {
    And,
    Or,
}

impl Op {
    pub fn flip(self) -> Op {
        match self {
            Op::And => Op::Or,
            Op::Or => Op::And,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Op::And => '&',
            Op::Or => '|',
        }
    }
}

/// Binary parse tree of a Boolean combination. Leaves name sources; each
/// source appears at most once.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExprTree {
    Leaf(String),
    And(Box<ExprTree>, Box<ExprTree>),
    Or(Box<ExprTree>, Box<ExprTree>),
}

impl ExprTree {
    pub fn leaf(name: impl Into<String>) -> Self {
        ExprTree::Leaf(name.into())
    }

    pub fn and(l: ExprTree, r: ExprTree) -> Self {
        ExprTree::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: ExprTree, r: ExprTree) -> Self {
        ExprTree::Or(Box::new(l), Box::new(r))
    }

    pub fn binary(op: Op, l: ExprTree, r: ExprTree) -> Self {
        match op {
            Op::And => ExprTree::and(l, r),
            Op::Or => ExprTree::or(l, r),
        }
    }

    /// Left fold `((a op b) op c) ...`. `items` must be nonempty.
    pub fn fold_left(op: Op, items: impl IntoIterator<Item = ExprTree>) -> Self {
        let mut it = items.into_iter();
        let first = it.next().expect("fold_left over empty operand list");
        it.fold(first, |acc, x| ExprTree::binary(op, acc, x))
    }

    pub fn op(&self) -> Option<Op> {
        match self {
            ExprTree::Leaf(_) => None,
            ExprTree::And(..) => Some(Op::And),
            ExprTree::Or(..) => Some(Op::Or),
        }
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            ExprTree::Leaf(s) => out.push(s),
            ExprTree::And(l, r) | ExprTree::Or(l, r) => {
                l.collect_leaves(out);
                r.collect_leaves(out);
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            ExprTree::Leaf(_) => 1,
            ExprTree::And(l, r) | ExprTree::Or(l, r) => l.leaf_count() + r.leaf_count(),
        }
    }

    pub fn contains_op(&self, op: Op) -> bool {
        match self {
            ExprTree::Leaf(_) => false,
            ExprTree::And(l, r) | ExprTree::Or(l, r) => {
                self.op() == Some(op) || l.contains_op(op) || r.contains_op(op)
            }
        }
    }

    /// Post-order evaluation: leaves resolve through `bind`, AND intersects,
    /// OR unions.
    pub fn evaluate<'m, M, F>(&self, bind: &F) -> Result<M>
    where
        M: SetAlgebra + Clone + 'm,
        F: Fn(&str) -> Option<&'m M>,
    {
        match self {
            ExprTree::Leaf(s) => bind(s)
                .cloned()
                .ok_or_else(|| Error::validation(format!("no mask bound for source {s:?}"))),
            ExprTree::And(l, r) => l.evaluate(bind)?.intersect(&r.evaluate(bind)?),
            ExprTree::Or(l, r) => l.evaluate(bind)?.union(&r.evaluate(bind)?),
        }
    }

    pub fn evaluate_bool(&self, value: &impl Fn(&str) -> bool) -> bool {
        match self {
            ExprTree::Leaf(s) => value(s),
            ExprTree::And(l, r) => l.evaluate_bool(value) && r.evaluate_bool(value),
            ExprTree::Or(l, r) => l.evaluate_bool(value) || r.evaluate_bool(value),
        }
    }
}

/// Fully parenthesised `&`/`|` form, e.g. `((((A&C)&D)&E)|B)`.
impl fmt::Display for ExprTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprTree::Leaf(s) => f.write_str(s),
            ExprTree::And(l, r) => write!(f, "({l}&{r})"),
            ExprTree::Or(l, r) => write!(f, "({l}|{r})"),
        }
    }
}
