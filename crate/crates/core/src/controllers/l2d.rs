//! Cost-sensitive learning-to-defer baselines adapted to per-row action losses.

use super::boosting::{fit_boosted_regressor, BoostConfig, BoostedRegressor};
use super::logistic::{fit_multinomial, LogisticModel};
use super::{not_fitted, FeatureMatrix, Policy, PolicyClass, PolicyInput, Standardizer};
use crate::loss::argmin;
use crate::{Error, LossMatrix, Result};

/// Row-replicated training set: each row appears once per action with the
/// action as label and weight `max_a L[i, a] - L[i, a]`. Rows whose losses
/// are all equal, and zero-weight replicas, are dropped.
pub fn replicate(x: &FeatureMatrix, losses: &LossMatrix) -> Result<(FeatureMatrix, Vec<usize>, Vec<f64>)> {
    if x.n() != losses.n() {
        return Err(Error::Shape(format!("{} feature rows for {} loss rows", x.n(), losses.n())));
    }
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut weights = Vec::new();
    for (i, row) in x.rows().enumerate() {
        let l = losses.row(i);
        let hi = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (a, &v) in l.iter().enumerate() {
            let w = hi - v;
            if w > 0.0 {
                data.extend_from_slice(row);
                labels.push(a);
                weights.push(w);
            }
        }
    }
    let n = labels.len();
    Ok((FeatureMatrix::from_flat(data, n, x.d())?, labels, weights))
}

#[derive(Debug, Clone)]
pub struct MozannarPolicy {
    name: String,
    c: f64,
    fitted: Option<(Standardizer, LogisticModel)>,
}

impl MozannarPolicy {
    pub fn new(c: f64) -> Self {
        Self { name: format!("mozannar_c{c}"), c, fitted: None }
    }
}

impl Policy for MozannarPolicy {
    fn family_name(&self) -> &str {
        &self.name
    }

    fn class_tag(&self) -> PolicyClass {
        PolicyClass::Pi2
    }

    fn fit(&mut self, input: PolicyInput<'_>, losses: &LossMatrix, _seed: u64) -> Result<()> {
        let s = Standardizer::fit(input.features)?;
        let (xr, y, w) = replicate(&s.transform(input.features)?, losses)?;
        if y.is_empty() {
            return Err(Error::Fit("every training row has identical action losses".into()));
        }
        let model = fit_multinomial(&xr, &y, losses.num_actions(), self.c, Some(&w))?;
        self.fitted = Some((s, model));
        Ok(())
    }

    fn predict(&self, input: PolicyInput<'_>) -> Result<Vec<usize>> {
        let (s, model) = self.fitted.as_ref().ok_or_else(|| not_fitted(&self.name))?;
        model.predict(&s.transform(input.features)?)
    }
}

/// One squared-loss boosted regressor per action; plays the smallest
/// predicted loss.
#[derive(Debug, Clone)]
pub struct NarasimhanPolicy {
    name: String,
    cfg: BoostConfig,
    fitted: Option<Vec<BoostedRegressor>>,
}

impl NarasimhanPolicy {
    pub fn new(max_depth: usize) -> Self {
        let cfg = BoostConfig::with_depth(max_depth);
        Self { name: format!("narasimhan_md{max_depth}"), cfg, fitted: None }
    }
}

impl Policy for NarasimhanPolicy {
    fn family_name(&self) -> &str {
        &self.name
    }

    fn class_tag(&self) -> PolicyClass {
        PolicyClass::Pi2
    }

    fn fit(&mut self, input: PolicyInput<'_>, losses: &LossMatrix, _seed: u64) -> Result<()> {
        if input.n() != losses.n() {
            return Err(Error::Shape(format!("{} feature rows for {} loss rows", input.n(), losses.n())));
        }
        let models = (0..losses.num_actions())
            .map(|a| {
                let y: Vec<f64> = losses.rows().iter().map(|r| r[a]).collect();
                fit_boosted_regressor(input.features, &y, self.cfg)
            })
            .collect::<Result<Vec<_>>>()?;
        self.fitted = Some(models);
        Ok(())
    }

    fn predict(&self, input: PolicyInput<'_>) -> Result<Vec<usize>> {
        let models = self.fitted.as_ref().ok_or_else(|| not_fitted(&self.name))?;
        let preds = models.iter().map(|m| m.predict(input.features)).collect::<Result<Vec<_>>>()?;
        Ok((0..input.n())
            .map(|i| argmin(&preds.iter().map(|p| p[i]).collect::<Vec<_>>()))
            .collect())
    }
}
