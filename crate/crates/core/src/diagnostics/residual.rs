use serde::{Deserialize, Serialize};

use crate::loss::best_fixed_action;
use crate::LossMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Fraction of rows where some action strictly beats the best fixed action.
    pub residual_mass: f64,
    /// Largest per-row improvement over the best fixed action.
    pub sup_gap: f64,
    pub bound: f64,
    pub best_action: usize,
    /// Risk of the best fixed action minus the per-row oracle risk.
    pub oracle_gain: f64,
}

pub fn residual_report(losses: &LossMatrix) -> ResidualReport {
    let (a_star, _) = best_fixed_action(losses);
    let mut count = 0usize;
    let mut sup_gap = 0.0_f64;
    let mut gain = 0.0;
    for row in losses.rows() {
        let best = row.iter().copied().fold(f64::INFINITY, f64::min);
        if best < row[a_star] {
            count += 1;
            let g = row[a_star] - best;
            sup_gap = sup_gap.max(g);
            gain += g;
        }
    }
    let n = losses.n() as f64;
    let residual_mass = count as f64 / n;
    ResidualReport {
        residual_mass,
        sup_gap,
        bound: residual_mass * sup_gap,
        best_action: a_star,
        oracle_gain: gain / n,
    }
}

/// `4 L_max sqrt(ln(2 |M|) / n_in)`: held-out selection error over `|M|` candidates.
pub fn selection_bound(num_candidates: usize, n_in: usize, l_max: f64) -> f64 {
    let m = num_candidates.max(1) as f64;
    4.0 * l_max * ((2.0 * m).ln() / n_in.max(1) as f64).sqrt()
}
