use serde::{Deserialize, Serialize};

use crate::loss::{argmin, best_fixed_action};
use crate::{Error, LossMatrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub mass: f64,
    /// Within-cell mean of `loss(a*) - loss(a_g*)`.
    pub gamma: f64,
    pub best_action: usize,
    pub size: usize,
    /// Largest per-action within-cell loss variance.
    pub sigma2: f64,
    /// Samples the cell needs before its gap is detectable; absent when `gamma = 0`.
    pub n_req: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionDiagnostics {
    pub cells: Vec<CellStats>,
    pub total_gain: f64,
    pub max_cell_gain: f64,
}

impl PartitionDiagnostics {
    pub fn per_cell_n_req(&self) -> Vec<Option<u64>> {
        self.cells.iter().map(|c| c.n_req).collect()
    }
}

/// Cell sample requirement
/// `k/(k-1) * max{8 ln(2/d)/p, (16 s2 + 8/3 L gamma) ln(4|A|/d) / (p gamma^2)}`.
pub fn cell_sample_requirement(
    mass: f64,
    gamma: f64,
    sigma2: f64,
    l_max: f64,
    num_actions: usize,
    delta: f64,
    kappa: usize,
) -> Option<u64> {
    if !(gamma > 0.0) || !(mass > 0.0) || kappa < 2 {
        return None;
    }
    let mass_term = 8.0 * (2.0 / delta).ln() / mass;
    let gap_term = (16.0 * sigma2 + 8.0 / 3.0 * l_max * gamma) * (4.0 * num_actions as f64 / delta).ln() / (mass * gamma * gamma);
    let k = kappa as f64;
    Some((k / (k - 1.0) * mass_term.max(gap_term)).ceil() as u64)
}

/// Per-cell masses, gaps against the global best fixed action, and sample
/// requirements for the partition `cells` (indices `0..K`, all non-empty).
pub fn partition_diagnostics(losses: &LossMatrix, cells: &[usize], delta: f64, kappa: usize) -> Result<PartitionDiagnostics> {
    if cells.len() != losses.n() {
        return Err(Error::Shape(format!("{} cell labels for {} rows", cells.len(), losses.n())));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    let k = cells.iter().max().map_or(0, |m| m + 1);
    let m = losses.num_actions();
    let (a_star, _) = best_fixed_action(losses);
    let mut sums = vec![vec![0.0; m]; k];
    let mut counts = vec![0usize; k];
    for (i, &g) in cells.iter().enumerate() {
        counts[g] += 1;
        for (s, v) in sums[g].iter_mut().zip(losses.row(i)) {
            *s += v;
        }
    }
    if let Some(g) = counts.iter().position(|&c| c == 0) {
        return Err(Error::invalid(format!("cell {g} is empty")));
    }
    let mut sq = vec![vec![0.0; m]; k];
    for (i, &g) in cells.iter().enumerate() {
        for a in 0..m {
            let e = losses.get(i, a) - sums[g][a] / counts[g] as f64;
            sq[g][a] += e * e;
        }
    }
    let n = losses.n() as f64;
    let mut out = Vec::with_capacity(k);
    let (mut total, mut max_gain) = (0.0, 0.0_f64);
    for g in 0..k {
        let c = counts[g] as f64;
        let best = argmin(&sums[g]);
        let gamma = ((sums[g][a_star] - sums[g][best]) / c).max(0.0);
        let mass = c / n;
        let sigma2 = sq[g].iter().map(|s| s / c).fold(0.0, f64::max);
        total += mass * gamma;
        max_gain = max_gain.max(mass * gamma);
        out.push(CellStats {
            mass,
            gamma,
            best_action: best,
            size: counts[g],
            sigma2,
            n_req: cell_sample_requirement(mass, gamma, sigma2, losses.l_max(), m, delta, kappa),
        });
    }
    Ok(PartitionDiagnostics { cells: out, total_gain: total, max_cell_gain: max_gain })
}
