//! Enumeration of Boolean combination ensembles.
//!
//! `Semantic` produces one canonical tree per distinct read-once AND/OR
//! function. A read-once function on two or more leaves has a unique
//! alternating normal form: a root gate whose children are either leaves or
//! gates of the opposite kind, one child per block of a set partition of the
//! leaves into at least two blocks. The generator walks those partitions
//! directly, so no deduplication pass is needed. Children are ordered by
//! their smallest leaf and folded left into a binary tree.
//!
//! `Syntactic` and `LeftDeep` produce ordered expressions without semantic
//! deduplication and exist for auditing combination counts.

use serde::{Deserialize, Serialize};

use super::tree::{ExprTree, Op};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnumerationMode {
    /// One tree per distinct read-once function.
    Semantic,
    /// Every permutation of every subset, every binary bracketing, every
    /// operator assignment.
    Syntactic,
    /// Every permutation of every subset folded left, every operator string.
    LeftDeep,
}

/// Canonical n-ary form of a read-once formula over source indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Node {
    Leaf(usize),
    Gate(Op, Vec<Node>),
}

impl Node {
    pub(crate) fn to_tree(&self, names: &[String]) -> ExprTree {
        match self {
            Node::Leaf(i) => ExprTree::leaf(names[*i].clone()),
            Node::Gate(op, children) => {
                ExprTree::fold_left(*op, children.iter().map(|c| c.to_tree(names)))
            }
        }
    }
}

/// Number of alternating trees with a fixed root gate on `n >= 2` labelled
/// leaves (`t`), and of forests of such trees with the opposite root (`f`).
/// Index `n` holds the value for `n` leaves.
#[derive(Debug, Clone)]
pub(crate) struct TreeCounts {
    pub t: Vec<u128>,
    pub f: Vec<u128>,
    pub binom: Vec<Vec<u128>>,
}

impl TreeCounts {
    pub(crate) fn new(max_n: usize) -> Self {
        let mut binom = vec![vec![0u128; max_n + 1]; max_n + 1];
        for n in 0..=max_n {
            binom[n][0] = 1;
            for k in 1..=n {
                binom[n][k] = binom[n - 1][k - 1] + if k < n { binom[n - 1][k] } else { 0 };
            }
        }
        let mut t = vec![0u128; max_n + 1];
        let mut f = vec![0u128; max_n + 1];
        f[0] = 1;
        if max_n >= 1 {
            f[1] = 1;
        }
        for n in 2..=max_n {
            t[n] = (1..n)
                .map(|m| binom[n - 1][m - 1] * leafish(&t, m) * f[n - m])
                .sum();
            f[n] = t[n] + leafish(&t, n);
        }
        TreeCounts { t, f, binom }
    }

    /// Number of leaf-or-opposite-gate subformulas on `m` leaves.
    pub(crate) fn leafish(&self, m: usize) -> u128 {
        leafish(&self.t, m)
    }
}

fn leafish(t: &[u128], m: usize) -> u128 {
    if m == 1 {
        1
    } else {
        t[m]
    }
}

/// Distinct read-once AND/OR functions depending on exactly `k` variables.
pub fn semantic_count(k: usize) -> u128 {
    match k {
        0 => 0,
        1 => 1,
        _ => 2 * TreeCounts::new(k).t[k],
    }
}

/// `sum_{j=min..=max} C(n, j) * semantic_count(j)`.
pub fn semantic_space_size(n: usize, min_size: usize, max_size: usize) -> u128 {
    let counts = TreeCounts::new(n.max(1));
    (min_size..=max_size.min(n))
        .map(|j| counts.binom[n][j] * semantic_count(j))
        .sum()
}

/// Ordered expressions on exactly `k` leaves: `k! * Catalan(k-1) * 2^(k-1)`.
pub fn syntactic_count(k: usize) -> u128 {
    if k == 0 {
        return 0;
    }
    let fact: u128 = (1..=k as u128).product();
    // Catalan(k-1) = C(2(k-1), k-1) / k
    let n = k - 1;
    let catalan = TreeCounts::new(2 * n).binom[2 * n][n] / (n as u128 + 1);
    fact * catalan * (1u128 << n)
}

/// Left-deep expressions on exactly `k` leaves: `k! * 2^(k-1)`.
pub fn left_deep_count(k: usize) -> u128 {
    if k == 0 {
        return 0;
    }
    (1..=k as u128).product::<u128>() * (1u128 << (k - 1))
}

pub(crate) fn normalize_sources<S: AsRef<str>>(sources: &[S]) -> Result<Vec<String>> {
    let mut names: Vec<String> = sources.iter().map(|s| s.as_ref().to_string()).collect();
    names.sort();
    names.dedup();
    if names.is_empty() {
        return Err(Error::validation("empty source set"));
    }
    Ok(names)
}

pub(crate) fn check_range(n: usize, min_size: usize, max_size: usize) -> Result<()> {
    if min_size < 1 || min_size > max_size || max_size > n {
        return Err(Error::validation(format!(
            "ensemble size range {min_size}..={max_size} invalid for {n} sources"
        )));
    }
    Ok(())
}

/// All ensembles over subsets of `sources` with size in `min_size..=max_size`.
///
/// Output is grouped by subset size, then by subset in lexicographic order,
/// then sorted by expression string.
pub fn enumerate_ensembles<S: AsRef<str>>(
    sources: &[S],
    min_size: usize,
    max_size: usize,
    mode: EnumerationMode,
) -> Result<Vec<ExprTree>> {
    let names = normalize_sources(sources)?;
    check_range(names.len(), min_size, max_size)?;
    let mut out = Vec::new();
    for size in min_size..=max_size {
        for subset in combinations(names.len(), size) {
            let mut trees: Vec<ExprTree> = match mode {
                EnumerationMode::Semantic => semantic_nodes(&subset)
                    .iter()
                    .map(|n| n.to_tree(&names))
                    .collect(),
                EnumerationMode::Syntactic => permutations(&subset)
                    .iter()
                    .flat_map(|p| all_bracketings(p, &names))
                    .collect(),
                EnumerationMode::LeftDeep => permutations(&subset)
                    .iter()
                    .flat_map(|p| left_deep(p, &names))
                    .collect(),
            };
            let mut keyed: Vec<(String, ExprTree)> =
                trees.drain(..).map(|t| (t.to_string(), t)).collect();
            keyed.sort_by(|a, b| a.0.cmp(&b.0));
            out.extend(keyed.into_iter().map(|(_, t)| t));
        }
    }
    Ok(out)
}

/// Canonical forms of every read-once function on exactly `elems`.
pub(crate) fn semantic_nodes(elems: &[usize]) -> Vec<Node> {
    match elems {
        [] => Vec::new(),
        [one] => vec![Node::Leaf(*one)],
        _ => {
            let mut v = gates(elems, Op::And);
            v.extend(gates(elems, Op::Or));
            v
        }
    }
}

fn gates(elems: &[usize], op: Op) -> Vec<Node> {
    let mut out = Vec::new();
    for blocks in set_partitions(elems) {
        if blocks.len() < 2 {
            continue;
        }
        let options: Vec<Vec<Node>> = blocks
            .iter()
            .map(|b| {
                if b.len() == 1 {
                    vec![Node::Leaf(b[0])]
                } else {
                    gates(b, op.flip())
                }
            })
            .collect();
        for children in cartesian(&options) {
            out.push(Node::Gate(op, children));
        }
    }
    out
}

/// Set partitions in restricted-growth order; blocks are listed by their
/// smallest element and keep `elems` order internally.
fn set_partitions(elems: &[usize]) -> Vec<Vec<Vec<usize>>> {
    fn go(elems: &[usize], i: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == elems.len() {
            out.push(cur.clone());
            return;
        }
        for b in 0..cur.len() {
            cur[b].push(elems[i]);
            go(elems, i + 1, cur, out);
            cur[b].pop();
        }
        cur.push(vec![elems[i]]);
        go(elems, i + 1, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    go(elems, 0, &mut Vec::new(), &mut out);
    out
}

fn cartesian(options: &[Vec<Node>]) -> Vec<Vec<Node>> {
    options.iter().fold(vec![Vec::new()], |acc, opts| {
        acc.iter()
            .flat_map(|prefix| {
                opts.iter().map(move |o| {
                    let mut p = prefix.clone();
                    p.push(o.clone());
                    p
                })
            })
            .collect()
    })
}

pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

fn all_bracketings(order: &[usize], names: &[String]) -> Vec<ExprTree> {
    if order.len() == 1 {
        return vec![ExprTree::leaf(names[order[0]].clone())];
    }
    let mut out = Vec::new();
    for split in 1..order.len() {
        let left = all_bracketings(&order[..split], names);
        let right = all_bracketings(&order[split..], names);
        for l in &left {
            for r in &right {
                for op in [Op::And, Op::Or] {
                    out.push(ExprTree::binary(op, l.clone(), r.clone()));
                }
            }
        }
    }
    out
}

fn left_deep(order: &[usize], names: &[String]) -> Vec<ExprTree> {
    let k = order.len();
    let n_ops = k.saturating_sub(1);
    (0..1usize << n_ops)
        .map(|bits| {
            let mut acc = ExprTree::leaf(names[order[0]].clone());
            for (j, &i) in order.iter().enumerate().skip(1) {
                let op = if bits >> (j - 1) & 1 == 1 { Op::Or } else { Op::And };
                acc = ExprTree::binary(op, acc, ExprTree::leaf(names[i].clone()));
            }
            acc
        })
        .collect()
}
