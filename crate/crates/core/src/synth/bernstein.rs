//! Monte Carlo check of the viability threshold: how often the sign of the
//! empirical selective gain is right at a given n and margin.

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::bernstein_n_min;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinSweepSpec {
    pub alpha: f64,
    pub q: f64,
    pub delta: f64,
    pub n_grid: Vec<usize>,
    pub beta_grid: Vec<f64>,
    pub replications: usize,
    pub seed: u64,
}

impl Default for BernsteinSweepSpec {
    fn default() -> Self {
        Self {
            alpha: 0.75,
            q: 0.3,
            delta: 0.05,
            n_grid: vec![20, 30, 50, 80, 130, 200, 320, 500, 800, 1300, 2000, 3200, 5000, 8000],
            beta_grid: vec![0.05, 0.10, 0.20],
            replications: 4000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernsteinCell {
    pub n: usize,
    pub beta: f64,
    /// Rows in the bottom-q tail, `floor(n q)`.
    pub m: usize,
    pub n_min: u64,
    /// Fraction of replications where the empirical gain has the right sign.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinSweep {
    pub spec: BernsteinSweepSpec,
    /// Row-major over `beta_grid` then `n_grid`.
    pub cells: Vec<BernsteinCell>,
}

impl BernsteinSweep {
    pub fn cell(&self, n: usize, beta: f64) -> Option<&BernsteinCell> {
        self.cells.iter().find(|c| c.n == n && c.beta == beta)
    }
}

/// Each replication draws `floor(n q)` Bernoulli(alpha) wrong-indicators in
/// the tail; the sign is correct when their mean exceeds `alpha - beta`.
pub fn bernstein_sweep(spec: &BernsteinSweepSpec) -> Result<BernsteinSweep> {
    if spec.n_grid.is_empty() || spec.beta_grid.is_empty() || spec.replications == 0 {
        return Err(Error::invalid("sweep grids and replication count must be non-empty"));
    }
    let grid: Vec<(usize, usize)> =
        (0..spec.beta_grid.len()).flat_map(|b| (0..spec.n_grid.len()).map(move |i| (b, i))).collect();
    let cells = grid
        .par_iter()
        .map(|&(bi, ni)| {
            let (n, beta) = (spec.n_grid[ni], spec.beta_grid[bi]);
            let n_min = bernstein_n_min(spec.alpha, beta, spec.q, spec.delta)?;
            let m = (n as f64 * spec.q).floor() as usize;
            if m == 0 {
                return Err(Error::invalid(format!("n = {n} leaves an empty tail at q = {}", spec.q)));
            }
            let alpha_min = spec.alpha - beta;
            let draw = Binomial::new(m as u64, spec.alpha).map_err(|e| Error::invalid(e.to_string()))?;
            let mut r = rng::rng(rng::derive(spec.seed, &[bi as u64, ni as u64]));
            let hits = (0..spec.replications)
                .filter(|_| draw.sample(&mut r) as f64 / m as f64 > alpha_min)
                .count();
            Ok(BernsteinCell { n, beta, m, n_min, rate: hits as f64 / spec.replications as f64 })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BernsteinSweep { spec: spec.clone(), cells })
}
