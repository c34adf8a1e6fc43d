use serde::{Deserialize, Serialize};

use super::{ResidualReport, ViabilityReport};
use crate::controllers::PolicyClass;
use crate::SelectiveConstants;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rationale {
    /// Too little residual mass for any adaptive controller to matter.
    ResidualBounded,
    /// The instance-level signal exists but n is below the viability threshold.
    VarianceBounded,
    /// Enough data; the larger ceiling decides.
    CeilingComparison,
    /// Reserved for predictions driven by a prior channel.
    PriorChannel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    /// Residual mass below which the residual set is negligible.
    pub residual_mass: f64,
    /// Residual bound below which adaptive gains are negligible.
    pub bound: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self { residual_mass: 0.02, bound: 0.005 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeDiagnostics {
    pub residual: ResidualReport,
    pub viability: ViabilityReport,
    pub c_pi1: f64,
    /// Proxy form, used for the prediction.
    pub c_pi2: f64,
    pub c_pi2_exact: f64,
    pub q_star: f64,
    pub predicted_class: PolicyClass,
    pub rationale: Rationale,
    /// A prior channel is available, so a gated controller may still win
    /// under cross-validation; the lattice prediction is unchanged.
    pub pi3_eligible: bool,
    /// Break-even constants; absent when the selective subproblem is degenerate.
    pub selective: Option<SelectiveConstants>,
    /// Cluster count of the partition attaining `c_pi1`.
    pub pi1_k: Option<usize>,
}

/// The regime decision: negligible residual first, then the viability
/// threshold, then the ceiling comparison.
pub fn classify(
    res: &ResidualReport,
    via: &ViabilityReport,
    c1: f64,
    c2: f64,
    thresholds: &RegimeThresholds,
) -> (PolicyClass, Rationale) {
    let beta_positive = via.beta > 0.0;
    if res.residual_mass < thresholds.residual_mass || res.bound < thresholds.bound || (!beta_positive && c1 <= 0.0) {
        return (PolicyClass::Pi0, Rationale::ResidualBounded);
    }
    if beta_positive && via.n_min.is_some_and(|m| (via.n as u64) < m) {
        let class = if c1 > 0.0 { PolicyClass::Pi1 } else { PolicyClass::Pi0 };
        return (class, Rationale::VarianceBounded);
    }
    let class = if c2 > c1 { PolicyClass::Pi2 } else { PolicyClass::Pi1 };
    (class, Rationale::CeilingComparison)
}

/// Bundles the inputs with the decision.
#[allow(clippy::too_many_arguments)]
pub fn classify_regime(
    residual: ResidualReport,
    viability: ViabilityReport,
    c_pi1: f64,
    c_pi2: f64,
    c_pi2_exact: f64,
    q_star: f64,
    thresholds: &RegimeThresholds,
    has_prior_channel: bool,
) -> RegimeDiagnostics {
    let (predicted_class, rationale) = classify(&residual, &viability, c_pi1, c_pi2, thresholds);
    RegimeDiagnostics {
        residual,
        viability,
        c_pi1,
        c_pi2,
        c_pi2_exact,
        q_star,
        predicted_class,
        rationale,
        pi3_eligible: has_prior_channel,
        selective: None,
        pi1_k: None,
    }
}
