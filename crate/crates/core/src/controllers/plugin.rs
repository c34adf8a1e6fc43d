//! Plug-in controllers: a classifier predicts which action is row-optimal,
//! and the action with the smallest expected loss under those probabilities
//! is played.

use rand::seq::SliceRandom;

use super::boosting::{fit_boosted_classifier, BoostConfig, BoostedClassifier};
use super::logistic::{fit_multinomial, nll_at_temperature, LogisticModel};
use super::{not_fitted, FeatureMatrix, Policy, PolicyClass, PolicyInput, Standardizer};
use crate::loss::argmin;
use crate::{rng, Error, LossMatrix, Result};

/// Class-conditional loss table: `table[a][b]` is the mean training loss of
/// action `b` over rows whose optimal action is `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct PluginRule {
    table: Vec<Vec<f64>>,
}

impl PluginRule {
    pub fn fit(losses: &LossMatrix, labels: &[usize]) -> Self {
        let m = losses.num_actions();
        let mut sums = vec![vec![0.0; m]; m];
        let mut counts = vec![0usize; m];
        for (i, &a) in labels.iter().enumerate() {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(losses.row(i)) {
                *s += v;
            }
        }
        let global = losses.column_means();
        let table = (0..m)
            .map(|a| {
                if counts[a] == 0 {
                    global.clone()
                } else {
                    sums[a].iter().map(|s| s / counts[a] as f64).collect()
                }
            })
            .collect();
        Self { table }
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.table
    }

    pub fn decide(&self, probs: &[f64]) -> usize {
        let m = self.table.len();
        let expected: Vec<f64> = (0..m)
            .map(|b| probs.iter().zip(&self.table).map(|(p, row)| p * row[b]).sum())
            .collect();
        argmin(&expected)
    }
}

fn check_rows(x: &FeatureMatrix, losses: &LossMatrix) -> Result<()> {
    if x.n() != losses.n() {
        return Err(Error::Shape(format!("{} feature rows for {} loss rows", x.n(), losses.n())));
    }
    Ok(())
}

/// Fraction of training rows held in for temperature fitting.
pub const CALIBRATION_FRACTION: f64 = 0.2;

/// Golden-section search for the temperature minimizing held-in NLL.
fn fit_temperature(logits: &[Vec<f64>], labels: &[usize], classes: &[usize]) -> f64 {
    let f = |log_t: f64| nll_at_temperature(logits, labels, classes, log_t.exp());
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.05f64.ln(), 20f64.ln());
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-4 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    ((a + b) / 2.0).exp()
}

/// Logistic plug-in on standardized features with temperature scaling.
///
/// The temperature is chosen on a held-in 20% split of the training rows
/// using a model fit on the other 80%; the final model is refit on all rows.
#[derive(Debug, Clone)]
pub struct SelectivePlugin {
    name: String,
    c: f64,
    calibrate: bool,
    fitted: Option<(Standardizer, LogisticModel, PluginRule)>,
}

impl SelectivePlugin {
    pub fn new(c: f64) -> Self {
        Self { name: format!("selective_c{c}"), c, calibrate: true, fitted: None }
    }

    /// Same learner without the temperature step.
    pub fn uncalibrated(c: f64) -> Self {
        Self { name: format!("logistic_c{c}"), c, calibrate: false, fitted: None }
    }

    pub fn model(&self) -> Option<&LogisticModel> {
        self.fitted.as_ref().map(|f| &f.1)
    }

    pub fn rule(&self) -> Option<&PluginRule> {
        self.fitted.as_ref().map(|f| &f.2)
    }

    fn temperature(&self, xs: &FeatureMatrix, labels: &[usize], m: usize, seed: u64) -> Result<f64> {
        let n = xs.n();
        let held = (n as f64 * CALIBRATION_FRACTION).round() as usize;
        if held < 2 || n - held < 2 {
            return Ok(1.0);
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng::rng(seed));
        let (cal, train) = order.split_at(held);
        let train_labels: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
        let model = fit_multinomial(&xs.subset(train), &train_labels, m, self.c, None)?;
        if model.classes().len() < 2 {
            return Ok(1.0);
        }
        let logits = model.logits(&xs.subset(cal))?;
        let cal_labels: Vec<usize> = cal.iter().map(|&i| labels[i]).collect();
        Ok(fit_temperature(&logits, &cal_labels, model.classes()))
    }
}

impl Policy for SelectivePlugin {
    fn family_name(&self) -> &str {
        &self.name
    }

    fn class_tag(&self) -> PolicyClass {
        PolicyClass::Pi2
    }

    fn fit(&mut self, input: PolicyInput<'_>, losses: &LossMatrix, seed: u64) -> Result<()> {
        check_rows(input.features, losses)?;
        let s = Standardizer::fit(input.features)?;
        let xs = s.transform(input.features)?;
        let labels = losses.row_argmin();
        let m = losses.num_actions();
        let t = if self.calibrate { self.temperature(&xs, &labels, m, seed)? } else { 1.0 };
        let mut model = fit_multinomial(&xs, &labels, m, self.c, None)?;
        model.set_temperature(t);
        self.fitted = Some((s, model, PluginRule::fit(losses, &labels)));
        Ok(())
    }

    fn predict(&self, input: PolicyInput<'_>) -> Result<Vec<usize>> {
        let (s, model, rule) = self.fitted.as_ref().ok_or_else(|| not_fitted(&self.name))?;
        Ok(model.predict_proba(&s.transform(input.features)?)?.iter().map(|p| rule.decide(p)).collect())
    }
}

/// Boosted-tree plug-in with the same expected-loss decision rule.
#[derive(Debug, Clone)]
pub struct HgbcPolicy {
    name: String,
    cfg: BoostConfig,
    fitted: Option<(BoostedClassifier, PluginRule)>,
}

impl HgbcPolicy {
    pub fn new(max_depth: usize) -> Self {
        Self::with_config(BoostConfig::with_depth(max_depth))
    }

    pub fn with_config(cfg: BoostConfig) -> Self {
        Self { name: format!("hgbc_md{}", cfg.max_depth), cfg, fitted: None }
    }
}

impl Policy for HgbcPolicy {
    fn family_name(&self) -> &str {
        &self.name
    }

    fn class_tag(&self) -> PolicyClass {
        PolicyClass::Pi2
    }

    fn fit(&mut self, input: PolicyInput<'_>, losses: &LossMatrix, _seed: u64) -> Result<()> {
        check_rows(input.features, losses)?;
        let labels = losses.row_argmin();
        let model = fit_boosted_classifier(input.features, &labels, losses.num_actions(), self.cfg)?;
        self.fitted = Some((model, PluginRule::fit(losses, &labels)));
        Ok(())
    }

    fn predict(&self, input: PolicyInput<'_>) -> Result<Vec<usize>> {
        let (model, rule) = self.fitted.as_ref().ok_or_else(|| not_fitted(&self.name))?;
        Ok(model.predict_proba(input.features)?.iter().map(|p| rule.decide(p)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::policy_risk;
    use crate::ActionSet;

    #[test]
    fn rule_reduces_to_a_probability_threshold_for_two_actions() {
        let acts = ActionSet::new(["direct", "defer"]).unwrap();
        let l = LossMatrix::new(vec![vec![0.0, 0.4], vec![1.0, 0.4], vec![1.0, 0.4]], acts).unwrap();
        let rule = PluginRule::fit(&l, &l.row_argmin());
        assert_eq!(rule.table(), &[vec![0.0, 0.4], vec![1.0, 0.4]]);
        assert_eq!(rule.decide(&[0.7, 0.3]), 0);
        assert_eq!(rule.decide(&[0.5, 0.5]), 1);
    }

    #[test]
    fn temperature_search_finds_the_nll_minimum() {
        let logits: Vec<Vec<f64>> = (0..40).map(|i| vec![0.0, if i % 2 == 0 { 4.0 } else { -4.0 }]).collect();
        // Labels agree with the sign 75% of the time, so the model is overconfident.
        let labels: Vec<usize> = (0..40).map(|i| usize::from((i % 2 == 0) ^ (i % 4 == 1))).collect();
        let t = fit_temperature(&logits, &labels, &[0, 1]);
        let grid_best = (1..2000)
            .map(|j| j as f64 * 0.01)
            .min_by(|a, b| nll_at_temperature(&logits, &labels, &[0, 1], *a).total_cmp(&nll_at_temperature(&logits, &labels, &[0, 1], *b)))
            .unwrap();
        assert!(t > 1.0 && (t - grid_best).abs() < 0.02, "{t} vs {grid_best}");
    }

    #[test]
    fn plugin_recovers_a_one_dimensional_oracle_separator() {
        // Direct is optimal for x < 0, defer for x > 0.
        let n = 400;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![(i as f64 + 0.5) / n as f64 * 2.0 - 1.0]).collect();
        let losses: Vec<Vec<f64>> = rows.iter().map(|r| if r[0] < 0.0 { vec![0.1, 0.5] } else { vec![0.9, 0.5] }).collect();
        let l = LossMatrix::new(losses, ActionSet::new(["direct", "defer"]).unwrap()).unwrap();
        let x = FeatureMatrix::from_rows(rows).unwrap();
        let oracle = policy_risk(&l, &l.row_argmin()).unwrap();
        for mut p in [Box::new(SelectivePlugin::new(0.3)) as Box<dyn Policy>, Box::new(HgbcPolicy::new(3))] {
            p.fit(PolicyInput::new(&x), &l, 1).unwrap();
            let risk = policy_risk(&l, &p.predict(PolicyInput::new(&x)).unwrap()).unwrap();
            assert!(risk <= oracle + 0.01, "{}: {risk} vs {oracle}", p.family_name());
        }
    }
}
