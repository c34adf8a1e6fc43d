//! Prints the winner maps of both phase sweeps and the population partition
//! gap of the default cluster process.

use regime_lattice::diagnostics::partition_diagnostics;
use regime_lattice::synth::{phase_sweep, sample_cluster_dgp, ClusterDgpSpec, PhaseSweepSpec};

fn main() -> regime_lattice::Result<()> {
    let big = sample_cluster_dgp(&ClusterDgpSpec::partition(1_000_000, 0.0, 1))?;
    let part = partition_diagnostics(&big.losses, &big.cells, 0.05, 5)?;
    println!("partition gap at the defaults: {:.4}", part.total_gain);

    let which = std::env::args().nth(1).unwrap_or_else(|| "both".into());
    let mut specs = Vec::new();
    if which != "pi3" {
        specs.push(PhaseSweepSpec::pi12());
    }
    if which != "pi12" {
        specs.push(PhaseSweepSpec::pi3());
    }
    for spec in specs {
        let sweep = phase_sweep(&spec)?;
        println!("{:?}: rows = {}, columns = n {:?}", spec.kind, spec.kind.knob_name(), spec.n_grid);
        for &knob in &spec.knob_grid {
            let row: Vec<String> = spec
                .n_grid
                .iter()
                .map(|&n| {
                    let c = sweep.cell(n, knob).expect("cell");
                    format!("{}:{:.3}/{:.3}", c.winner, c.losses[0], c.losses[1])
                })
                .collect();
            println!("{knob:>4} {}", row.join("  "));
        }
    }
    Ok(())
}
