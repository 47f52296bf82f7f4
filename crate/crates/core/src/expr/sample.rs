use rand::seq::index;
use rand::Rng;

use super::enumerate::{normalize_sources, semantic_count, Node, TreeCounts};
use super::tree::{ExprTree, Op};
use crate::error::{Error, Result};

/// Uniform sampler over read-once ensembles of a given size.
///
/// Draws a subset uniformly, then a uniform alternating normal form on it by
/// sizing the block that holds the smallest remaining leaf in proportion to
/// the number of completions. Trees come out in the same canonical shape as
/// [`super::enumerate_ensembles`] in semantic mode.
#[derive(Debug, Clone)]
pub struct EnsembleSampler {
    names: Vec<String>,
    counts: TreeCounts,
}

impl EnsembleSampler {
    pub fn new<S: AsRef<str>>(sources: &[S]) -> Result<Self> {
        let names = normalize_sources(sources)?;
        if names.len() > 30 {
            return Err(Error::validation("sampler supports at most 30 sources"));
        }
        let counts = TreeCounts::new(names.len());
        Ok(EnsembleSampler { names, counts })
    }

    pub fn sources(&self) -> &[String] {
        &self.names
    }

    /// Number of distinct ensembles with exactly `size` leaves.
    pub fn stratum_size(&self, size: usize) -> u128 {
        if size == 0 || size > self.names.len() {
            return 0;
        }
        self.counts.binom[self.names.len()][size] * semantic_count(size)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, size: usize) -> Result<ExprTree> {
        let n = self.names.len();
        if size == 0 || size > n {
            return Err(Error::validation(format!(
                "cannot sample ensembles of size {size} from {n} sources"
            )));
        }
        let mut subset = index::sample(rng, n, size).into_vec();
        subset.sort_unstable();
        let node = if size == 1 {
            Node::Leaf(subset[0])
        } else {
            let op = if rng.random::<bool>() { Op::Or } else { Op::And };
            self.gate(rng, &subset, op)
        };
        Ok(node.to_tree(&self.names))
    }

    fn gate<R: Rng + ?Sized>(&self, rng: &mut R, elems: &[usize], op: Op) -> Node {
        let n = elems.len();
        debug_assert!(n >= 2);
        // first block strictly smaller than the whole set: at least two children
        let (first, rest) = self.split_first_block(rng, elems, n - 1);
        let mut children = vec![self.block(rng, &first, op.flip())];
        self.forest(rng, &rest, op.flip(), &mut children);
        Node::Gate(op, children)
    }

    fn forest<R: Rng + ?Sized>(&self, rng: &mut R, elems: &[usize], child_op: Op, out: &mut Vec<Node>) {
        let mut rest = elems.to_vec();
        while !rest.is_empty() {
            let (first, remaining) = self.split_first_block(rng, &rest, rest.len());
            out.push(self.block(rng, &first, child_op));
            rest = remaining;
        }
    }

    fn block<R: Rng + ?Sized>(&self, rng: &mut R, elems: &[usize], op: Op) -> Node {
        if elems.len() == 1 {
            Node::Leaf(elems[0])
        } else {
            self.gate(rng, elems, op)
        }
    }

    /// Picks the block containing `elems[0]` with size in `1..=max_block`,
    /// weighted by the number of forests that complete it.
    fn split_first_block<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        elems: &[usize],
        max_block: usize,
    ) -> (Vec<usize>, Vec<usize>) {
        let n = elems.len();
        let c = &self.counts;
        let weights: Vec<u128> = (1..=max_block)
            .map(|m| c.binom[n - 1][m - 1] * c.leafish(m) * c.f[n - m])
            .collect();
        let total: u128 = weights.iter().sum();
        let mut draw = rng.random_range(0..total);
        let mut m = 1;
        for (i, w) in weights.iter().enumerate() {
            if draw < *w {
                m = i + 1;
                break;
            }
            draw -= w;
        }
        let others = &elems[1..];
        let mut picked = index::sample(rng, others.len(), m - 1).into_vec();
        picked.sort_unstable();
        let mut first = vec![elems[0]];
        first.extend(picked.iter().map(|&i| others[i]));
        let rest = others
            .iter()
            .enumerate()
            .filter(|(i, _)| picked.binary_search(i).is_err())
            .map(|(_, &e)| e)
            .collect();
        (first, rest)
    }
}
