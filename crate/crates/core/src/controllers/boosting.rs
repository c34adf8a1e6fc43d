//! Histogram gradient boosting on quantile-binned features.
//!
//! Trees are grown depth-wise on per-bin gradient/hessian sums with Newton
//! leaf values. Classification is one-vs-rest logistic boosting; regression
//! uses squared loss.

use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::{Error, Result};

pub const MAX_BINS: usize = 64;
const MIN_HESSIAN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub max_depth: usize,
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
}

impl BoostConfig {
    pub fn with_depth(max_depth: usize) -> Self {
        Self { max_depth, ..Self::default() }
    }
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self { max_depth: 3, n_rounds: 200, learning_rate: 0.05, min_samples_leaf: 20 }
    }
}

/// Per-column cut points; a value lands in bin `#{cuts < v}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binner {
    cuts: Vec<Vec<f64>>,
}

impl Binner {
    pub fn fit(x: &FeatureMatrix) -> Self {
        let cuts = (0..x.d())
            .map(|j| {
                let mut v = x.column(j);
                v.sort_by(f64::total_cmp);
                v.dedup();
                if v.len() <= MAX_BINS {
                    v.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0).collect()
                } else {
                    let mut c: Vec<f64> = (1..MAX_BINS)
                        .map(|q| {
                            let pos = q as f64 / MAX_BINS as f64 * (v.len() - 1) as f64;
                            let lo = pos.floor() as usize;
                            v[lo] + (v[lo + 1] - v[lo]) / 2.0
                        })
                        .collect();
                    c.dedup();
                    c
                }
            })
            .collect();
        Self { cuts }
    }

    pub fn num_bins(&self, j: usize) -> usize {
        self.cuts[j].len() + 1
    }

    pub fn transform(&self, x: &FeatureMatrix) -> Vec<Vec<u8>> {
        x.rows()
            .map(|row| row.iter().zip(&self.cuts).map(|(&v, c)| c.partition_point(|&t| t < v) as u8).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum TreeNode {
    Leaf(f64),
    /// Rows with `bin <= split_bin` go left.
    Split { feature: usize, split_bin: u8, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BinnedTree {
    nodes: Vec<TreeNode>,
}

impl BinnedTree {
    fn predict(&self, bins: &[u8]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf(v) => return v,
                TreeNode::Split { feature, split_bin, left, right } => {
                    at = if bins[feature] <= split_bin { left } else { right };
                }
            }
        }
    }
}

struct Grower<'a> {
    bins: &'a [Vec<u8>],
    num_bins: Vec<usize>,
    grad: &'a [f64],
    hess: &'a [f64],
    cfg: BoostConfig,
    nodes: Vec<TreeNode>,
}

impl Grower<'_> {
    fn grow(&mut self, idx: &[usize], depth: usize) -> usize {
        let g: f64 = idx.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = idx.iter().map(|&i| self.hess[i]).sum();
        let slot = self.nodes.len();
        let leaf = TreeNode::Leaf(-self.cfg.learning_rate * g / h.max(1e-12));
        if depth >= self.cfg.max_depth || idx.len() < 2 * self.cfg.min_samples_leaf {
            self.nodes.push(leaf);
            return slot;
        }
        let parent_score = g * g / h.max(1e-12);
        let mut best: Option<(usize, u8, f64)> = None;
        for f in 0..self.num_bins.len() {
            let nb = self.num_bins[f];
            let mut hg = vec![0.0; nb];
            let mut hh = vec![0.0; nb];
            let mut hc = vec![0usize; nb];
            for &i in idx {
                let b = self.bins[i][f] as usize;
                hg[b] += self.grad[i];
                hh[b] += self.hess[i];
                hc[b] += 1;
            }
            let (mut gl, mut hl, mut cl) = (0.0, 0.0, 0usize);
            for b in 0..nb.saturating_sub(1) {
                gl += hg[b];
                hl += hh[b];
                cl += hc[b];
                let cr = idx.len() - cl;
                if cl < self.cfg.min_samples_leaf || cr < self.cfg.min_samples_leaf {
                    continue;
                }
                let (gr, hr) = (g - gl, h - hl);
                if hl < MIN_HESSIAN || hr < MIN_HESSIAN {
                    continue;
                }
                let gain = gl * gl / hl + gr * gr / hr - parent_score;
                if gain > 1e-12 && best.is_none_or(|bb| gain > bb.2) {
                    best = Some((f, b as u8, gain));
                }
            }
        }
        match best {
            None => {
                self.nodes.push(leaf);
                slot
            }
            Some((feature, split_bin, _)) => {
                self.nodes.push(TreeNode::Leaf(0.0));
                let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.bins[i][feature] <= split_bin);
                let left = self.grow(&l, depth + 1);
                let right = self.grow(&r, depth + 1);
                self.nodes[slot] = TreeNode::Split { feature, split_bin, left, right };
                slot
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Ensemble {
    init: f64,
    trees: Vec<BinnedTree>,
}

impl Ensemble {
    fn raw(&self, bins: &[u8]) -> f64 {
        self.init + self.trees.iter().map(|t| t.predict(bins)).sum::<f64>()
    }
}

fn boost(
    bins: &[Vec<u8>],
    binner: &Binner,
    cfg: BoostConfig,
    init: f64,
    mut grad_hess: impl FnMut(&[f64], &mut [f64], &mut [f64]),
) -> Ensemble {
    let n = bins.len();
    let mut raw = vec![init; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(cfg.n_rounds);
    let all: Vec<usize> = (0..n).collect();
    let num_bins: Vec<usize> = (0..binner.cuts.len()).map(|j| binner.num_bins(j)).collect();
    for _ in 0..cfg.n_rounds {
        grad_hess(&raw, &mut grad, &mut hess);
        let mut g = Grower { bins, num_bins: num_bins.clone(), grad: &grad, hess: &hess, cfg, nodes: Vec::new() };
        g.grow(&all, 0);
        let tree = BinnedTree { nodes: g.nodes };
        for (r, b) in raw.iter_mut().zip(bins) {
            *r += tree.predict(b);
        }
        trees.push(tree);
    }
    Ensemble { init, trees }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn check_cfg(cfg: &BoostConfig, n: usize) -> Result<()> {
    if cfg.max_depth == 0 || cfg.n_rounds == 0 || !(cfg.learning_rate > 0.0) || cfg.min_samples_leaf == 0 {
        return Err(Error::invalid("boosting needs positive depth, rounds, learning rate and leaf size"));
    }
    if n == 0 {
        return Err(Error::Empty("boosting needs training rows"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedClassifier {
    binner: Binner,
    num_labels: usize,
    /// One logistic ensemble per present label; a lone label is stored with no ensembles.
    classes: Vec<usize>,
    models: Vec<Ensemble>,
}

pub fn fit_boosted_classifier(
    x: &FeatureMatrix,
    labels: &[usize],
    num_labels: usize,
    cfg: BoostConfig,
) -> Result<BoostedClassifier> {
    check_cfg(&cfg, x.n())?;
    if labels.len() != x.n() {
        return Err(Error::Shape(format!("{} labels for {} rows", labels.len(), x.n())));
    }
    if labels.iter().any(|&l| l >= num_labels) {
        return Err(Error::invalid("label out of range"));
    }
    let binner = Binner::fit(x);
    let bins = binner.transform(x);
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let fitted: &[usize] = match classes.len() {
        1 => &[],
        // Two classes: one ensemble for the larger label, its complement for the other.
        2 => &classes[1..],
        _ => &classes,
    };
    let models = fitted
        .iter()
        .map(|&c| {
            let y: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l == c))).collect();
            let p = y.iter().sum::<f64>() / y.len() as f64;
            boost(&bins, &binner, cfg, (p / (1.0 - p)).ln(), |raw, g, h| {
                for i in 0..raw.len() {
                    let pi = sigmoid(raw[i]);
                    g[i] = pi - y[i];
                    h[i] = pi * (1.0 - pi);
                }
            })
        })
        .collect();
    Ok(BoostedClassifier { binner, num_labels, classes, models })
}

impl BoostedClassifier {
    pub fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
        if x.d() != self.binner.cuts.len() {
            return Err(Error::Shape(format!("model fit on {} features, got {}", self.binner.cuts.len(), x.d())));
        }
        Ok(self
            .binner
            .transform(x)
            .iter()
            .map(|b| {
                let mut p = vec![0.0; self.num_labels];
                match self.classes.len() {
                    1 => p[self.classes[0]] = 1.0,
                    2 => {
                        let p1 = sigmoid(self.models[0].raw(b));
                        p[self.classes[0]] = 1.0 - p1;
                        p[self.classes[1]] = p1;
                    }
                    _ => {
                        let s: Vec<f64> = self.models.iter().map(|m| sigmoid(m.raw(b))).collect();
                        let total: f64 = s.iter().sum();
                        for (&c, v) in self.classes.iter().zip(s) {
                            p[c] = v / total;
                        }
                    }
                }
                p
            })
            .collect())
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<usize>> {
        Ok(self
            .predict_proba(x)?
            .iter()
            .map(|p| {
                let mut best = 0;
                for (c, &v) in p.iter().enumerate() {
                    if v > p[best] {
                        best = c;
                    }
                }
                best
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedRegressor {
    binner: Binner,
    model: Ensemble,
}

pub fn fit_boosted_regressor(x: &FeatureMatrix, y: &[f64], cfg: BoostConfig) -> Result<BoostedRegressor> {
    check_cfg(&cfg, x.n())?;
    if y.len() != x.n() {
        return Err(Error::Shape(format!("{} targets for {} rows", y.len(), x.n())));
    }
    let binner = Binner::fit(x);
    let bins = binner.transform(x);
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let model = boost(&bins, &binner, cfg, mean, |raw, g, h| {
        for i in 0..raw.len() {
            g[i] = raw[i] - y[i];
            h[i] = 1.0;
        }
    });
    Ok(BoostedRegressor { binner, model })
}

impl BoostedRegressor {
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        if x.d() != self.binner.cuts.len() {
            return Err(Error::Shape(format!("model fit on {} features, got {}", self.binner.cuts.len(), x.d())));
        }
        Ok(self.binner.transform(x).iter().map(|b| self.model.raw(b)).collect())
    }
}
