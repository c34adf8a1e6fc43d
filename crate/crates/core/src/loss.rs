//! Combined task loss, action sets and per-sample loss matrices.
//!
//! The per-sample loss of action `a` is
//! `w_c * (1 - c) + w_h * h + w_k * k` where `c` is correctness, `h` the
//! semantic risk and `k` the operational cost of that action on that sample.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Canonical action order. Ties are always broken towards the lower index.
pub const CANONICAL_ACTIONS: [&str; 4] = ["direct", "retrieve", "defer", "abstain"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ActionSet {
    labels: Vec<String>,
}

impl ActionSet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(Error::invalid("an action set needs at least two actions"));
        }
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() {
                return Err(Error::invalid("action labels must be non-empty"));
            }
            if labels[..i].contains(l) {
                return Err(Error::invalid(format!("duplicate action label `{l}`")));
            }
        }
        Ok(Self { labels })
    }

    /// `direct, retrieve, defer, abstain`.
    pub fn canonical() -> Self {
        Self::new(CANONICAL_ACTIONS).expect("canonical labels are valid")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Index of the `direct` action, or 0 when no action carries that label.
    pub fn direct(&self) -> usize {
        self.index_of("direct").unwrap_or(0)
    }
}

impl TryFrom<Vec<String>> for ActionSet {
    type Error = Error;
    fn try_from(v: Vec<String>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ActionSet> for Vec<String> {
    fn from(a: ActionSet) -> Self {
        a.labels
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub w_c: f64,
    pub w_h: f64,
    pub w_k: f64,
}

impl Weights {
    pub fn new(w_c: f64, w_h: f64, w_k: f64) -> Result<Self> {
        let w = Self { w_c, w_h, w_k };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("w_c", self.w_c), ("w_h", self.w_h), ("w_k", self.w_k)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("weight {name} must be a finite non-negative real, got {v}")));
            }
        }
        Ok(())
    }
}

impl Default for Weights {
    /// `(1, 1, 0.05)`.
    fn default() -> Self {
        Self { w_c: 1.0, w_h: 1.0, w_k: 0.05 }
    }
}

/// Row-major `n x |A|` correctness, risk and cost matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct LossComponents {
    pub actions: ActionSet,
    pub correct: Vec<Vec<bool>>,
    pub risk: Vec<Vec<f64>>,
    pub cost: Vec<Vec<f64>>,
}

impl LossComponents {
    pub fn new(
        actions: ActionSet,
        correct: Vec<Vec<bool>>,
        risk: Vec<Vec<f64>>,
        cost: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let c = Self { actions, correct, risk, cost };
        c.validate()?;
        Ok(c)
    }

    pub fn n(&self) -> usize {
        self.correct.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.correct.len();
        let m = self.actions.len();
        if self.risk.len() != n || self.cost.len() != n {
            return Err(Error::Shape(format!(
                "component row counts differ: c={n}, h={}, k={}",
                self.risk.len(),
                self.cost.len()
            )));
        }
        for i in 0..n {
            if self.correct[i].len() != m || self.risk[i].len() != m || self.cost[i].len() != m {
                return Err(Error::Shape(format!("row {i} does not have {m} actions in every component")));
            }
            for a in 0..m {
                let h = self.risk[i][a];
                let k = self.cost[i][a];
                if !(0.0..=1.0).contains(&h) {
                    return Err(Error::invalid(format!("risk h[{i}][{a}] = {h} is outside [0, 1]")));
                }
                if !k.is_finite() || k < 0.0 {
                    return Err(Error::invalid(format!("cost k[{i}][{a}] = {k} must be finite and non-negative")));
                }
            }
        }
        Ok(())
    }

    /// Correctness of the `direct` action per sample.
    pub fn direct_correct(&self) -> Vec<bool> {
        let d = self.actions.direct();
        self.correct.iter().map(|row| row[d]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossMatrix {
    values: Vec<Vec<f64>>,
    actions: ActionSet,
    l_max: f64,
}

impl LossMatrix {
    /// Builds a matrix from precomputed losses; `l_max` is the largest entry.
    pub fn new(values: Vec<Vec<f64>>, actions: ActionSet) -> Result<Self> {
        let l_max = values
            .iter()
            .flat_map(|r| r.iter().copied())
            .fold(0.0_f64, f64::max);
        Self::with_bound(values, actions, l_max)
    }

    /// Builds a matrix with an explicit upper bound on the loss.
    pub fn with_bound(values: Vec<Vec<f64>>, actions: ActionSet, l_max: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("loss matrix has no rows"));
        }
        let m = actions.len();
        for (i, row) in values.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Shape(format!("loss row {i} has {} entries, expected {m}", row.len())));
            }
            for (a, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 || v > l_max + 1e-12 {
                    return Err(Error::invalid(format!(
                        "loss[{i}][{a}] = {v} is outside [0, {l_max}]"
                    )));
                }
            }
        }
        Ok(Self { values, actions, l_max })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn actions(&self) -> &ActionSet {
        &self.actions
    }

    pub fn l_max(&self) -> f64 {
        self.l_max
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn get(&self, i: usize, a: usize) -> f64 {
        self.values[i][a]
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.num_actions()];
        for row in &self.values {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        let n = self.n() as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }

    /// Rows selected by `indices`, keeping the parent's `l_max`.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            values: indices.iter().map(|&i| self.values[i].clone()).collect(),
            actions: self.actions.clone(),
            l_max: self.l_max,
        }
    }

    /// Per-row argmin action, lowest index on ties.
    pub fn row_argmin(&self) -> Vec<usize> {
        self.values.iter().map(|r| argmin(r)).collect()
    }
}

/// Index of the smallest value; first index wins ties.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

pub fn assemble_loss(components: &LossComponents, weights: &Weights) -> Result<LossMatrix> {
    weights.validate()?;
    let values: Vec<Vec<f64>> = (0..components.n())
        .map(|i| {
            (0..components.actions.len())
                .map(|a| {
                    let c = if components.correct[i][a] { 1.0 } else { 0.0 };
                    weights.w_c * (1.0 - c) + weights.w_h * components.risk[i][a] + weights.w_k * components.cost[i][a]
                })
                .collect()
        })
        .collect();
    let k_max = components
        .cost
        .iter()
        .flat_map(|r| r.iter().copied())
        .fold(0.0_f64, f64::max);
    let l_max = weights.w_c + weights.w_h + weights.w_k * k_max;
    LossMatrix::with_bound(values, components.actions.clone(), l_max)
}

/// Column-mean argmin and its risk.
pub fn best_fixed_action(losses: &LossMatrix) -> (usize, f64) {
    let means = losses.column_means();
    let a = argmin(&means);
    (a, means[a])
}

pub fn policy_risk(losses: &LossMatrix, assignment: &[usize]) -> Result<f64> {
    if assignment.len() != losses.n() {
        return Err(Error::Shape(format!(
            "assignment has {} entries for {} samples",
            assignment.len(),
            losses.n()
        )));
    }
    let mut total = 0.0;
    for (i, &a) in assignment.iter().enumerate() {
        if a >= losses.num_actions() {
            return Err(Error::invalid(format!("action index {a} out of range at sample {i}")));
        }
        total += losses.get(i, a);
    }
    Ok(total / losses.n() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectiveConstants {
    /// Mean direct loss on direct-correct samples.
    pub l_r: f64,
    /// Mean direct loss on direct-wrong samples.
    pub l_w: f64,
    /// Mean fallback loss.
    pub l_a: f64,
    pub alpha_min: f64,
}

impl SelectiveConstants {
    pub fn from_means(l_r: f64, l_w: f64, l_a: f64) -> Result<Self> {
        if l_w <= l_r {
            return Err(Error::DegenerateSelective { l_r, l_w });
        }
        Ok(Self { l_r, l_w, l_a, alpha_min: (l_a - l_r) / (l_w - l_r) })
    }
}

/// Break-even constants of the direct-vs-fallback subproblem, computed on
/// the whole matrix (never per fold).
pub fn selective_constants(
    losses: &LossMatrix,
    direct_correct: &[bool],
    fallback: usize,
) -> Result<SelectiveConstants> {
    if direct_correct.len() != losses.n() {
        return Err(Error::Shape(format!(
            "{} correctness labels for {} samples",
            direct_correct.len(),
            losses.n()
        )));
    }
    if fallback >= losses.num_actions() {
        return Err(Error::invalid(format!("fallback action {fallback} out of range")));
    }
    let d = losses.actions().direct();
    let (mut sum_r, mut n_r, mut sum_w, mut n_w, mut sum_a) = (0.0, 0usize, 0.0, 0usize, 0.0);
    for (i, &ok) in direct_correct.iter().enumerate() {
        if ok {
            sum_r += losses.get(i, d);
            n_r += 1;
        } else {
            sum_w += losses.get(i, d);
            n_w += 1;
        }
        sum_a += losses.get(i, fallback);
    }
    if n_r == 0 {
        return Err(Error::Empty("no direct-correct samples"));
    }
    if n_w == 0 {
        return Err(Error::Empty("no direct-wrong samples"));
    }
    SelectiveConstants::from_means(sum_r / n_r as f64, sum_w / n_w as f64, sum_a / losses.n() as f64)
}
