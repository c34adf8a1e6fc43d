//! Regime diagnostics on the bundled four-action fixture, plus the anatomy
//! of its stored four-cell partition.
//!
//! cargo run --release --example diagnose_fixture

use std::path::Path;

use regime_lattice::diagnostics::{partition_diagnostics, residual_report};
use regime_lattice::io::csv::read_cells;
use regime_lattice::io::report::render_diagnose;
use regime_lattice::io::{app::run_diagnose, load_dataset, DatasetPaths, RunConfig};

fn main() -> regime_lattice::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/four_action");
    let paths = DatasetPaths {
        features: dir.join("features.csv"),
        components: Some(dir.join("components.csv")),
        ..Default::default()
    };
    let cfg = RunConfig::default();
    let data = load_dataset(&paths, &cfg.weights)?;

    let means = data.losses.column_means();
    for (a, m) in data.losses.actions().labels().iter().zip(&means) {
        println!("mean loss {a:<9} {m:.4}");
    }
    let res = residual_report(&data.losses);
    println!(
        "best fixed action: {}, P(R) = {:.3}, sup gap = {:.3}, bound = {:.3}, oracle gain = {:.3}\n",
        data.losses.actions().label(res.best_action),
        res.residual_mass,
        res.sup_gap,
        res.bound,
        res.oracle_gain
    );

    let report = run_diagnose(&data, &cfg)?;
    print!("{}", render_diagnose(&report));

    let cells = read_cells(&dir.join("cells.csv"))?;
    let part = partition_diagnostics(&data.losses, &cells, cfg.delta, cfg.outer_folds)?;
    println!("\nstored partition:");
    for (g, c) in part.cells.iter().enumerate() {
        println!(
            "  cell {g}: p = {:.3}, best = {:<8} gamma = {:.3}, p*gamma = {:.4}",
            c.mass,
            data.losses.actions().label(c.best_action),
            c.gamma,
            c.mass * c.gamma
        );
    }
    println!("  total gain {:.4}", part.total_gain);
    Ok(())
}
