use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controllers::PoolConfig;
use crate::cv::CvConfig;
use crate::diagnostics::{default_q_grid, DiagnoseOptions, RegimeThresholds};
use crate::{Error, Result, Weights};

/// Settings that determine the results of a run. Output locations are
/// deliberately absent so a manifest does not depend on them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub weights: Weights,
    pub q: f64,
    pub delta: f64,
    pub q_grid: Vec<f64>,
    /// Action compared against `direct` in the selective subproblem.
    pub fallback: String,
    pub outer_folds: usize,
    pub inner_folds: usize,
    pub seeds: Vec<u64>,
    /// Seed for diagnostics and synthetic sweeps.
    pub seed: u64,
    pub k_grid: Vec<usize>,
    pub pool: PoolConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            weights: Weights::default(),
            q: 0.3,
            delta: 0.05,
            q_grid: default_q_grid(),
            fallback: "abstain".into(),
            outer_folds: 5,
            inner_folds: 5,
            seeds: vec![0, 1, 2, 3, 4],
            seed: 42,
            k_grid: (2..=8).collect(),
            pool: PoolConfig::canonical(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::invalid(format!("q must lie in (0, 1], got {}", self.q)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.q_grid.iter().any(|&q| !(q > 0.0 && q <= 1.0)) || self.q_grid.is_empty() {
            return Err(Error::invalid("coverage grid values must lie in (0, 1]"));
        }
        self.pool.validate()
    }

    pub fn diagnose_options(&self) -> DiagnoseOptions {
        DiagnoseOptions {
            q: self.q,
            delta: self.delta,
            q_grid: self.q_grid.clone(),
            folds: self.outer_folds,
            seed: self.seed,
            k_grid: self.k_grid.clone(),
            thresholds: RegimeThresholds::default(),
        }
    }

    pub fn cv_config(&self) -> CvConfig {
        CvConfig {
            outer_folds: self.outer_folds,
            inner_folds: self.inner_folds,
            seeds: self.seeds.clone(),
            pool: self.pool.clone(),
        }
    }
}

pub fn read_pool(path: &Path) -> Result<PoolConfig> {
    let text = std::fs::read_to_string(path)?;
    let pool: PoolConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Schema { path: path.into(), message: e.to_string() })?;
    pool.validate()?;
    Ok(pool)
}

/// Parses `w_c,w_h,w_k`.
pub fn parse_weights(s: &str) -> Result<Weights> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad weight `{p}`"))))
        .collect::<Result<_>>()?;
    match parts[..] {
        [c, h, k] => Weights::new(c, h, k),
        _ => Err(Error::invalid(format!("expected three comma-separated weights, got `{s}`"))),
    }
}
