use serde::{Deserialize, Serialize};

use super::bottom_q_precision;
use crate::{Error, LossMatrix, Result, SelectiveConstants};

/// Oracle partition gain `risk(a*) - risk(cell-wise argmin)` of one partition.
pub fn partition_gain(losses: &LossMatrix, cells: &[usize]) -> Result<f64> {
    Ok(super::partition_diagnostics(losses, cells, 0.05, 5)?.total_gain)
}

/// Largest partition gain over the candidate partitions.
pub fn ceiling_pi1(losses: &LossMatrix, candidates: &[Vec<usize>]) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidate partitions"));
    }
    let mut best = f64::NEG_INFINITY;
    for c in candidates {
        best = best.max(partition_gain(losses, c)?);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pi2Ceiling {
    /// `max_q q (mu_w(q) - alpha_min)(L_w - L_r)`, floored at 0.
    pub exact: f64,
    pub q_star: f64,
    /// `q* beta (L_w - L_r)`.
    pub proxy: f64,
}

/// Evaluates the instance-level ceiling on `q_grid` (scanned in ascending
/// order; the smallest q wins ties and is reported when nothing is positive).
pub fn ceiling_pi2(
    constants: &SelectiveConstants,
    scores: &[f64],
    direct_wrong: &[bool],
    q_grid: &[f64],
    beta: f64,
) -> Result<Pi2Ceiling> {
    let spread = constants.l_w - constants.l_r;
    if !(spread > 0.0) {
        return Err(Error::DegenerateSelective { l_r: constants.l_r, l_w: constants.l_w });
    }
    if q_grid.is_empty() {
        return Err(Error::invalid("empty coverage grid"));
    }
    let mut grid = q_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut exact = 0.0;
    let mut q_star = grid[0];
    for &q in &grid {
        let v = q * (bottom_q_precision(scores, direct_wrong, q)? - constants.alpha_min) * spread;
        if v > exact {
            exact = v;
            q_star = q;
        }
    }
    Ok(Pi2Ceiling { exact, q_star, proxy: q_star * beta.max(0.0) * spread })
}

/// `{0.05, 0.10, ..., 1.00}`.
pub fn default_q_grid() -> Vec<f64> {
    (1..=20).map(|i| f64::from(i) / 20.0).collect()
}
