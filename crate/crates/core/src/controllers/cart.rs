//! Gini-impurity classification trees with midpoint thresholds.

use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { leaf: usize, counts: Vec<usize> },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
    num_leaves: usize,
    d: usize,
}

fn gini_sum(counts: &[usize], n: usize) -> f64 {
    // n * gini, which is additive across children.
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    n - counts.iter().map(|&c| (c * c) as f64).sum::<f64>() / n
}

struct Builder<'a> {
    x: &'a FeatureMatrix,
    y: &'a [usize],
    k: usize,
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<Node>,
    num_leaves: usize,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.k];
        for &i in idx {
            c[self.y[i]] += 1;
        }
        c
    }

    fn best_split(&self, idx: &[usize], parent: f64) -> Option<(usize, f64)> {
        let n = idx.len();
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = idx.to_vec();
        for f in 0..self.x.d() {
            order.sort_by(|&a, &b| self.x.row(a)[f].total_cmp(&self.x.row(b)[f]).then(a.cmp(&b)));
            let mut left = vec![0; self.k];
            let mut right = self.counts(idx);
            for s in 1..n {
                let moved = order[s - 1];
                left[self.y[moved]] += 1;
                right[self.y[moved]] -= 1;
                let lo = self.x.row(moved)[f];
                let hi = self.x.row(order[s])[f];
                if lo == hi || s < self.min_leaf || n - s < self.min_leaf {
                    continue;
                }
                let impurity = gini_sum(&left, s) + gini_sum(&right, n - s);
                if best.is_none_or(|b| impurity < b.2) {
                    best = Some((f, lo + (hi - lo) / 2.0, impurity));
                }
            }
        }
        best.filter(|b| b.2 < parent - 1e-12).map(|b| (b.0, b.1))
    }

    fn grow(&mut self, idx: &[usize], depth: usize) -> usize {
        let counts = self.counts(idx);
        let parent = gini_sum(&counts, idx.len());
        let split = if depth < self.max_depth && idx.len() >= 2 * self.min_leaf && parent > 0.0 {
            self.best_split(idx, parent)
        } else {
            None
        };
        let slot = self.nodes.len();
        match split {
            None => {
                self.nodes.push(Node::Leaf { leaf: self.num_leaves, counts });
                self.num_leaves += 1;
            }
            Some((feature, threshold)) => {
                self.nodes.push(Node::Leaf { leaf: usize::MAX, counts: Vec::new() });
                let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x.row(i)[feature] <= threshold);
                let left = self.grow(&l, depth + 1);
                let right = self.grow(&r, depth + 1);
                self.nodes[slot] = Node::Split { feature, threshold, left, right };
            }
        }
        slot
    }
}

/// Grows a tree greedily on `labels` (values in `0..num_labels`).
pub fn cart_tree(
    x: &FeatureMatrix,
    labels: &[usize],
    num_labels: usize,
    max_depth: usize,
    min_samples_leaf: usize,
) -> Result<Tree> {
    if labels.len() != x.n() {
        return Err(Error::Shape(format!("{} labels for {} rows", labels.len(), x.n())));
    }
    if min_samples_leaf == 0 || x.n() < min_samples_leaf {
        return Err(Error::invalid(format!(
            "need at least min_samples_leaf = {min_samples_leaf} rows, got {}",
            x.n()
        )));
    }
    if labels.iter().any(|&l| l >= num_labels) {
        return Err(Error::invalid("tree label out of range"));
    }
    let mut b = Builder { x, y: labels, k: num_labels, max_depth, min_leaf: min_samples_leaf, nodes: Vec::new(), num_leaves: 0 };
    let all: Vec<usize> = (0..x.n()).collect();
    b.grow(&all, 0);
    Ok(Tree { nodes: b.nodes, num_leaves: b.num_leaves, d: x.d() })
}

impl Tree {
    pub fn num_leaves(&self) -> usize {
        self.num_leaves
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    fn leaf_node(&self, row: &[f64]) -> &Node {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split { feature, threshold, left, right } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
                leaf => return leaf,
            }
        }
    }

    pub fn leaves(&self, x: &FeatureMatrix) -> Result<Vec<usize>> {
        self.check(x)?;
        Ok(x.rows()
            .map(|row| match self.leaf_node(row) {
                Node::Leaf { leaf, .. } => *leaf,
                Node::Split { .. } => unreachable!(),
            })
            .collect())
    }

    /// Majority label of the leaf, lowest label on ties.
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<usize>> {
        self.check(x)?;
        Ok(x.rows()
            .map(|row| match self.leaf_node(row) {
                Node::Leaf { counts, .. } => {
                    let mut best = 0;
                    for (c, &v) in counts.iter().enumerate() {
                        if v > counts[best] {
                            best = c;
                        }
                    }
                    best
                }
                Node::Split { .. } => unreachable!(),
            })
            .collect())
    }

    fn check(&self, x: &FeatureMatrix) -> Result<()> {
        if x.d() != self.d {
            return Err(Error::Shape(format!("tree fit on {} features, got {}", self.d, x.d())));
        }
        Ok(())
    }
}
