//! Synthetic data-generating processes and sweep runners.

mod bernstein;
mod cluster_dgp;
mod phase;

pub use bernstein::{bernstein_sweep, BernsteinCell, BernsteinSweep, BernsteinSweepSpec};
pub use cluster_dgp::{
    sample_cluster_dgp, synthetic_actions, ClusterDgpSpec, ClusterSample, PARTITION_BUMP, PARTITION_FALLBACK_LOSS, PRIOR_BK, PRIOR_BUMP,
    PRIOR_FALLBACK_LOSS, PRIOR_WRONG_LOSS,
};
pub use phase::{
    cv_loss, declare_winner, gated_policy, instance_policy, phase_sweep, pi12_phase_sweep, pi3_sweep, PhaseCell,
    PhaseSweep, PhaseSweepSpec, SweepKind,
};
