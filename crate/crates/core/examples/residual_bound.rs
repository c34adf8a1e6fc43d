//! The residual bound caps every assignment's gain over the best fixed
//! action. Checks it on random loss matrices.
//!
//! cargo run --release --example residual_bound

use rand::Rng as _;
use regime_lattice::diagnostics::residual_report;
use regime_lattice::loss::{best_fixed_action, policy_risk};
use regime_lattice::{ActionSet, LossMatrix};

fn main() -> regime_lattice::Result<()> {
    let mut rng = regime_lattice::rng::rng(1);
    let actions = ActionSet::canonical();
    let mut worst_slack = f64::INFINITY;
    for _ in 0..200 {
        let rows: Vec<Vec<f64>> = (0..50).map(|_| (0..4).map(|_| rng.random_range(0.0..2.0)).collect()).collect();
        let m = LossMatrix::new(rows, actions.clone())?;
        let res = residual_report(&m);
        let (_, fixed) = best_fixed_action(&m);
        let random: Vec<usize> = (0..50).map(|_| rng.random_range(0..4)).collect();
        for assignment in [m.row_argmin(), random] {
            let gain = fixed - policy_risk(&m, &assignment)?;
            worst_slack = worst_slack.min(res.bound - gain);
        }
    }
    println!("smallest (bound - gain) over 400 assignments: {worst_slack:.4}");
    Ok(())
}
