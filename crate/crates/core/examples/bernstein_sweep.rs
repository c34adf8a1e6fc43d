//! Sign-correctness of the bottom-q precision estimator as n crosses the
//! viability threshold.
//!
//! cargo run --release --example bernstein_sweep

use regime_lattice::diagnostics::bernstein_n_min;
use regime_lattice::synth::{bernstein_sweep, BernsteinSweepSpec};

fn main() -> regime_lattice::Result<()> {
    let spec = BernsteinSweepSpec::default();
    let sweep = bernstein_sweep(&spec)?;
    print!("{:>6}", "n");
    for b in &spec.beta_grid {
        print!("  beta={b:<5}");
    }
    println!();
    for &n in &spec.n_grid {
        print!("{n:>6}");
        for &b in &spec.beta_grid {
            let c = sweep.cell(n, b).expect("grid cell");
            let mark = if n as u64 >= c.n_min { '+' } else { ' ' };
            print!("  {:>9.3}{mark}", c.rate);
        }
        println!();
    }
    for &b in &spec.beta_grid {
        println!("n_min(beta = {b}) = {}", bernstein_n_min(spec.alpha, b, spec.q, spec.delta)?);
    }
    println!("(+ marks n >= n_min)");
    Ok(())
}
