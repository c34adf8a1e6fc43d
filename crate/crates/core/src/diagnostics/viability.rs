use serde::{Deserialize, Serialize};

use super::auc;
use crate::controllers::logistic::fit_multinomial;
use crate::controllers::{FeatureMatrix, Standardizer};
use crate::cv::{complement, make_folds};
use crate::{Error, Result, SelectiveConstants};

/// Inverse regularization of the scorer behind the AUC ceiling estimate.
pub const SCORER_C: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViabilityReport {
    pub alpha_emp: f64,
    pub alpha_min: f64,
    pub beta: f64,
    pub q: f64,
    pub delta: f64,
    /// Absent when `beta <= 0`.
    pub n_min: Option<u64>,
    pub n: usize,
    pub viable: bool,
    /// Direct-wrong rate among the lowest-scored `q` fraction.
    pub mu_w_q: f64,
}

/// The unrounded Bernstein threshold `2 a (1 - a) ln(2 / delta) / (q b^2)`.
pub fn bernstein_n_min_raw(alpha: f64, beta: f64, q: f64, delta: f64) -> Result<f64> {
    if !(0.5..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0.5, 1], got {alpha}")));
    }
    if !(beta > 0.0) {
        return Err(Error::NonPositiveMargin(beta));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::invalid(format!("q must lie in (0, 1], got {q}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(2.0 * alpha * (1.0 - alpha) * (2.0 / delta).ln() / (q * beta * beta))
}

pub fn bernstein_n_min(alpha: f64, beta: f64, q: f64, delta: f64) -> Result<u64> {
    Ok(bernstein_n_min_raw(alpha, beta, q, delta)?.ceil() as u64)
}

/// Fraction of direct-wrong rows among the `floor(n q)` lowest scores, ties
/// broken by row index.
pub fn bottom_q_precision(scores: &[f64], direct_wrong: &[bool], q: f64) -> Result<f64> {
    if scores.len() != direct_wrong.len() {
        return Err(Error::Shape(format!("{} scores for {} labels", scores.len(), direct_wrong.len())));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::invalid(format!("q must lie in (0, 1], got {q}")));
    }
    let m = (scores.len() as f64 * q).floor() as usize;
    if m == 0 {
        return Err(Error::invalid(format!("coverage q = {q} selects no rows out of {}", scores.len())));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    Ok(order[..m].iter().filter(|&&i| direct_wrong[i]).count() as f64 / m as f64)
}

/// Out-of-fold probability that `direct` is correct, from a logistic scorer
/// fit on standardized training folds. Fold count drops (with a warning)
/// until every training fold holds both classes.
pub fn out_of_fold_scores(x: &FeatureMatrix, direct_correct: &[bool], folds: usize, seed: u64) -> Result<Vec<f64>> {
    if direct_correct.len() != x.n() {
        return Err(Error::Shape(format!("{} labels for {} rows", direct_correct.len(), x.n())));
    }
    if x.n() < 2 * folds {
        return Err(Error::invalid(format!("need n >= 2 x folds, got n = {} with {folds} folds", x.n())));
    }
    if direct_correct.iter().all(|&c| c) || direct_correct.iter().all(|&c| !c) {
        return Err(Error::SingleClass);
    }
    let labels: Vec<usize> = direct_correct.iter().map(|&c| usize::from(c)).collect();
    let mut kappa = folds;
    let split = loop {
        if kappa < 2 {
            return Err(Error::SingleClass);
        }
        let f = make_folds(x.n(), kappa, seed)?;
        let ok = (0..kappa).all(|k| {
            let tr = complement(&f, k);
            tr.iter().any(|&i| labels[i] == 1) && tr.iter().any(|&i| labels[i] == 0)
        });
        if ok {
            break f;
        }
        log::warn!("a training fold lacks one correctness class; retrying with {} folds", kappa - 1);
        kappa -= 1;
    };
    let mut scores = vec![0.0; x.n()];
    for (k, test) in split.iter().enumerate() {
        let train = complement(&split, k);
        let xt = x.subset(&train);
        let s = Standardizer::fit(&xt)?;
        let y: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
        let model = fit_multinomial(&s.transform(&xt)?, &y, 2, SCORER_C, None)?;
        let p = model.predict_proba(&s.transform(&x.subset(test))?)?;
        for (&i, pi) in test.iter().zip(p) {
            scores[i] = pi[1];
        }
    }
    Ok(scores)
}

/// AUC of the concatenated out-of-fold scores against direct correctness.
pub fn estimate_alpha_emp(x: &FeatureMatrix, direct_correct: &[bool], folds: usize, seed: u64) -> Result<f64> {
    auc(&out_of_fold_scores(x, direct_correct, folds, seed)?, direct_correct)
}

pub fn viability_report(
    alpha_emp: f64,
    constants: &SelectiveConstants,
    scores: &[f64],
    direct_wrong: &[bool],
    q: f64,
    delta: f64,
) -> Result<ViabilityReport> {
    let beta = alpha_emp - constants.alpha_min;
    // An AUC below one half has no certified direction either.
    let n_min = if beta > 0.0 && alpha_emp >= 0.5 { Some(bernstein_n_min(alpha_emp, beta, q, delta)?) } else { None };
    let n = scores.len();
    Ok(ViabilityReport {
        alpha_emp,
        alpha_min: constants.alpha_min,
        beta,
        q,
        delta,
        n_min,
        n,
        viable: beta > 0.0 && n_min.is_some_and(|m| n as u64 >= m),
        mu_w_q: bottom_q_precision(scores, direct_wrong, q)?,
    })
}
