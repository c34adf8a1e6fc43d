//! Partition router against the instance-level learner as the within-cell
//! signal grows.
//!
//! cargo run --release --example phase_transition

use regime_lattice::controllers::PolicyClass;
use regime_lattice::synth::{pi12_phase_sweep, PhaseSweepSpec};

fn main() -> regime_lattice::Result<()> {
    let spec = PhaseSweepSpec::pi12();
    let sweep = pi12_phase_sweep(&spec)?;
    println!("winner (margin) by {} and n", spec.kind.knob_name());
    print!("{:>5}", "");
    for n in &spec.n_grid {
        print!("{n:>14}");
    }
    println!();
    for &bk in &spec.knob_grid {
        print!("{bk:>5}");
        for &n in &spec.n_grid {
            let c = sweep.cell(n, bk).expect("grid cell");
            print!("{:>14}", format!("{} ({:.3})", c.winner, c.margin));
        }
        println!();
    }
    let (w2, t2) = sweep.wins(PolicyClass::Pi2, |c| c.knob >= 1.0);
    let (w1, t1) = sweep.wins(PolicyClass::Pi1, |c| c.knob <= 0.5 && c.n >= 300);
    println!("Pi2 wins {w2}/{t2} cells with bk >= 1; Pi1 wins {w1}/{t1} cells with bk <= 0.5, n >= 300");
    Ok(())
}
