//! A label-free prior channel lets a gated controller beat the
//! instance-level learner it falls back to.
//!
//! cargo run --release --example prior_channel [z_strength]

use regime_lattice::controllers::{PriorGate, ThresholdGate};
use regime_lattice::synth::{cv_loss, gated_policy, instance_policy, sample_cluster_dgp, ClusterDgpSpec};

fn main() -> regime_lattice::Result<()> {
    let z: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2.5);
    let spec = ClusterDgpSpec::prior(2400, z, 5);
    let sample = sample_cluster_dgp(&spec)?;

    let mut gate = ThresholdGate::new(spec.tau, "direct", "defer");
    gate.bind(sample.losses.actions())?;
    let fired = sample.prior.values().iter().filter(|&&z| gate.decide(z).is_some()).count();
    println!("gate fires on {fired}/{} rows at tau = {}", sample.prior.len(), spec.tau);

    let inst = cv_loss(|| Box::new(instance_policy()), &sample, 5, 0)?;
    let gated = cv_loss(|| Box::new(gated_policy(spec.tau)), &sample, 5, 0)?;
    println!("z_strength {z}: instance-level {inst:.4}, prior-gated {gated:.4}");
    Ok(())
}
