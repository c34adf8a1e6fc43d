//! Data-estimable regime quantities and the predicted controller class.

mod auc;
mod ceilings;
mod partition;
mod regime;
mod residual;
mod viability;

pub use auc::auc;
pub use ceilings::{ceiling_pi1, ceiling_pi2, default_q_grid, partition_gain, Pi2Ceiling};
pub use partition::{cell_sample_requirement, partition_diagnostics, CellStats, PartitionDiagnostics};
pub use regime::{classify, classify_regime, Rationale, RegimeDiagnostics, RegimeThresholds};
pub use residual::{residual_report, selection_bound, ResidualReport};
pub use viability::{
    bernstein_n_min, bernstein_n_min_raw, bottom_q_precision, estimate_alpha_emp, out_of_fold_scores, viability_report,
    ViabilityReport, SCORER_C,
};

use serde::{Deserialize, Serialize};

use crate::controllers::kmeans::kmeans;
use crate::controllers::{FeatureMatrix, Standardizer};
use crate::loss::selective_constants;
use crate::{Error, LossMatrix, Result, SelectiveConstants};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseOptions {
    pub q: f64,
    pub delta: f64,
    pub q_grid: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    /// Cluster counts of the candidate partitions behind the partition ceiling.
    pub k_grid: Vec<usize>,
    pub thresholds: RegimeThresholds,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        Self {
            q: 0.3,
            delta: 0.05,
            q_grid: default_q_grid(),
            folds: 5,
            seed: 42,
            k_grid: (2..=8).collect(),
            thresholds: RegimeThresholds::default(),
        }
    }
}

/// Runs every diagnostic on one dataset and predicts the winning class.
///
/// `fallback` is the action the selective subproblem compares `direct`
/// against. When its break-even constants are degenerate, the AUC margin is
/// reported against `alpha_min = 1` (never positive) and the instance-level
/// ceiling is zero.
pub fn diagnose(
    x: &FeatureMatrix,
    losses: &LossMatrix,
    direct_correct: &[bool],
    fallback: usize,
    has_prior_channel: bool,
    opts: &DiagnoseOptions,
) -> Result<RegimeDiagnostics> {
    if x.n() != losses.n() {
        return Err(Error::Shape(format!("{} feature rows for {} loss rows", x.n(), losses.n())));
    }
    let selective = match selective_constants(losses, direct_correct, fallback) {
        Ok(c) => Some(c),
        Err(Error::DegenerateSelective { l_r, l_w }) => {
            log::warn!("selective subproblem is degenerate (L_w = {l_w} <= L_r = {l_r})");
            None
        }
        Err(e) => return Err(e),
    };
    let constants = selective.unwrap_or(SelectiveConstants { l_r: 0.0, l_w: 1.0, l_a: 1.0, alpha_min: 1.0 });
    let scores = out_of_fold_scores(x, direct_correct, opts.folds, opts.seed)?;
    let alpha_emp = auc(&scores, direct_correct)?;
    let wrong: Vec<bool> = direct_correct.iter().map(|c| !c).collect();
    let via = viability_report(alpha_emp, &constants, &scores, &wrong, opts.q, opts.delta)?;
    let residual = residual_report(losses);

    let xs = Standardizer::fit(x)?.transform(x)?;
    let mut c1 = 0.0;
    let mut pi1_k = None;
    for &k in opts.k_grid.iter().filter(|&&k| k >= 1 && k <= x.n()) {
        let km = kmeans(&xs, k, opts.seed)?;
        // Lloyd can leave a cluster empty; relabel to drop it.
        let cells = compact(&km.assignment);
        let g = partition_gain(losses, &cells)?;
        if pi1_k.is_none() || g > c1 {
            c1 = g;
            pi1_k = Some(k);
        }
    }

    let ceiling = if via.beta > 0.0 && selective.is_some() {
        ceiling_pi2(&constants, &scores, &wrong, &opts.q_grid, via.beta)?
    } else {
        Pi2Ceiling { exact: 0.0, q_star: opts.q_grid.iter().copied().fold(f64::INFINITY, f64::min), proxy: 0.0 }
    };
    let mut out = classify_regime(
        residual,
        via,
        c1,
        ceiling.proxy,
        ceiling.exact,
        ceiling.q_star,
        &opts.thresholds,
        has_prior_channel,
    );
    out.selective = selective;
    out.pi1_k = pi1_k;
    Ok(out)
}

/// Relabels cell indices to `0..K'` in order of first appearance.
pub fn compact(cells: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    cells
        .iter()
        .map(|c| {
            let next = map.len();
            *map.entry(*c).or_insert(next)
        })
        .collect()
}
