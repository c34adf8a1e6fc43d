//! Multinomial logistic regression trained by full-batch gradient descent.
//!
//! The objective is the weighted cross-entropy summed over rows plus
//! `||W||^2 / (2C)` on the coefficients (intercepts are not penalized), the
//! same convention as liblinear-style `C`. It is divided by the total row
//! weight before optimization so the stopping tolerance does not depend on n.

use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::{Error, Result};

pub const MAX_EPOCHS: usize = 500;
pub const GRAD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// Label of each fitted class, ascending.
    classes: Vec<usize>,
    num_labels: usize,
    d: usize,
    /// `classes.len() x d`, row-major.
    coef: Vec<f64>,
    intercept: Vec<f64>,
    temperature: f64,
    pub epochs: usize,
    pub converged: bool,
}

struct Problem<'a> {
    x: &'a FeatureMatrix,
    y: Vec<usize>,
    w: Vec<f64>,
    k: usize,
    inv_c: f64,
    total_w: f64,
}

impl Problem<'_> {
    fn dim(&self) -> usize {
        self.k * (self.x.d() + 1)
    }

    fn value_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.x.d();
        let k = self.k;
        let (coef, intercept) = theta.split_at(k * d);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut logits = vec![0.0; k];
        let mut loss = 0.0;
        for (i, row) in self.x.rows().enumerate() {
            let wi = self.w[i];
            if wi == 0.0 {
                continue;
            }
            for c in 0..k {
                logits[c] = intercept[c] + dot(&coef[c * d..(c + 1) * d], row);
            }
            let lse = log_sum_exp(&logits);
            loss += wi * (lse - logits[self.y[i]]);
            for c in 0..k {
                let r = wi * ((logits[c] - lse).exp() - if c == self.y[i] { 1.0 } else { 0.0 });
                for (g, xv) in grad[c * d..(c + 1) * d].iter_mut().zip(row) {
                    *g += r * xv;
                }
                grad[k * d + c] += r;
            }
        }
        let mut penalty = 0.0;
        for (g, b) in grad[..k * d].iter_mut().zip(coef) {
            penalty += b * b;
            *g += self.inv_c * b;
        }
        let scale = 1.0 / self.total_w;
        grad.iter_mut().for_each(|g| *g *= scale);
        (loss + 0.5 * self.inv_c * penalty) * scale
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Fits a softmax model on `labels` (values in `0..num_labels`).
///
/// Only labels present in the training rows are modelled; absent labels get
/// probability zero. A single present label yields a constant model.
pub fn fit_multinomial(
    x: &FeatureMatrix,
    labels: &[usize],
    num_labels: usize,
    c: f64,
    weights: Option<&[f64]>,
) -> Result<LogisticModel> {
    if labels.len() != x.n() {
        return Err(Error::Shape(format!("{} labels for {} rows", labels.len(), x.n())));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::invalid(format!("inverse regularization C must be positive, got {c}")));
    }
    if let Some(w) = weights {
        if w.len() != x.n() {
            return Err(Error::Shape(format!("{} weights for {} rows", w.len(), x.n())));
        }
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("row weights must be finite and non-negative"));
        }
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= num_labels) {
        return Err(Error::invalid(format!("label {bad} outside 0..{num_labels}")));
    }
    let w: Vec<f64> = weights.map_or_else(|| vec![1.0; x.n()], <[f64]>::to_vec);
    let total_w: f64 = w.iter().sum();
    if total_w <= 0.0 {
        return Err(Error::Empty("no positively weighted rows"));
    }
    let mut present = vec![false; num_labels];
    for (&l, &wi) in labels.iter().zip(&w) {
        if wi > 0.0 {
            present[l] = true;
        }
    }
    let classes: Vec<usize> = (0..num_labels).filter(|&l| present[l]).collect();
    let d = x.d();
    if classes.len() == 1 {
        return Ok(LogisticModel {
            classes,
            num_labels,
            d,
            coef: vec![0.0; d],
            intercept: vec![0.0],
            temperature: 1.0,
            epochs: 0,
            converged: true,
        });
    }
    let mut index = vec![0; num_labels];
    for (j, &l) in classes.iter().enumerate() {
        index[l] = j;
    }
    let problem = Problem {
        x,
        y: labels.iter().map(|&l| index[l]).collect(),
        w,
        k: classes.len(),
        inv_c: 1.0 / c,
        total_w,
    };
    let (theta, epochs, converged) = minimize(&problem);
    let (coef, intercept) = theta.split_at(problem.k * d);
    Ok(LogisticModel {
        classes,
        num_labels,
        d,
        coef: coef.to_vec(),
        intercept: intercept.to_vec(),
        temperature: 1.0,
        epochs,
        converged,
    })
}

/// Gradient descent with Barzilai-Borwein steps safeguarded by Armijo
/// backtracking.
fn minimize(p: &Problem<'_>) -> (Vec<f64>, usize, bool) {
    let dim = p.dim();
    let mut theta = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut f = p.value_grad(&theta, &mut grad);
    let mut step = 1.0;
    let mut trial = vec![0.0; dim];
    let mut trial_grad = vec![0.0; dim];
    for epoch in 0..MAX_EPOCHS {
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        if gnorm2.sqrt() < GRAD_TOL {
            return (theta, epoch, true);
        }
        let mut t = step;
        let mut f_new;
        loop {
            for j in 0..dim {
                trial[j] = theta[j] - t * grad[j];
            }
            f_new = p.value_grad(&trial, &mut trial_grad);
            if f_new <= f - 1e-4 * t * gnorm2 || t < 1e-12 {
                break;
            }
            t *= 0.5;
        }
        let mut sy = 0.0;
        let mut ss = 0.0;
        for j in 0..dim {
            let s = trial[j] - theta[j];
            sy += s * (trial_grad[j] - grad[j]);
            ss += s * s;
        }
        step = if sy > 0.0 && (ss / sy).is_finite() { (ss / sy).clamp(1e-10, 1e10) } else { 1.0 };
        std::mem::swap(&mut theta, &mut trial);
        std::mem::swap(&mut grad, &mut trial_grad);
        f = f_new;
        if t < 1e-12 {
            // Line search stalled at machine precision.
            return (theta, epoch + 1, norm(&grad) < GRAD_TOL);
        }
    }
    let converged = norm(&grad) < GRAD_TOL;
    (theta, MAX_EPOCHS, converged)
}

impl LogisticModel {
    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn set_temperature(&mut self, t: f64) {
        self.temperature = t;
    }

    /// Raw logits for the fitted classes.
    pub fn logits(&self, x: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
        if x.d() != self.d {
            return Err(Error::Shape(format!("model fit on {} features, got {}", self.d, x.d())));
        }
        let d = self.d;
        Ok(x.rows()
            .map(|row| {
                (0..self.classes.len())
                    .map(|c| self.intercept[c] + dot(&self.coef[c * d..(c + 1) * d], row))
                    .collect()
            })
            .collect())
    }

    /// Probabilities over all `num_labels` labels, temperature applied.
    pub fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
        Ok(self
            .logits(x)?
            .into_iter()
            .map(|z| softmax_full(&z, self.temperature, &self.classes, self.num_labels))
            .collect())
    }

    /// Most probable label, lowest label on ties.
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<usize>> {
        Ok(self
            .predict_proba(x)?
            .iter()
            .map(|p| crate::loss::argmin(&p.iter().map(|v| -v).collect::<Vec<_>>()))
            .collect())
    }
}

pub(crate) fn softmax_full(logits: &[f64], temperature: f64, classes: &[usize], num_labels: usize) -> Vec<f64> {
    let scaled: Vec<f64> = logits.iter().map(|z| z / temperature).collect();
    let lse = log_sum_exp(&scaled);
    let mut out = vec![0.0; num_labels];
    for (z, &l) in scaled.iter().zip(classes) {
        out[l] = (z - lse).exp();
    }
    out
}

/// Mean negative log-likelihood of `labels` under `logits / t`.
pub(crate) fn nll_at_temperature(logits: &[Vec<f64>], labels: &[usize], classes: &[usize], t: f64) -> f64 {
    let mut total = 0.0;
    for (z, &y) in logits.iter().zip(labels) {
        let scaled: Vec<f64> = z.iter().map(|v| v / t).collect();
        let lse = log_sum_exp(&scaled);
        total += match classes.iter().position(|&c| c == y) {
            Some(j) => lse - scaled[j],
            // Label never seen in training: a large constant keeps the search finite.
            None => 50.0,
        };
    }
    total / logits.len().max(1) as f64
}
