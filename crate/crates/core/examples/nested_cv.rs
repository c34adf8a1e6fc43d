//! Strict nested CV of the canonical pool on a synthetic sample where the
//! instance-level class should win, with the data-access audit.
//!
//! cargo run --release --example nested_cv [n] [bk]

use regime_lattice::controllers::PoolConfig;
use regime_lattice::cv::{per_class_table, strict_nested_cv_audited, CvConfig, CvData, Phase};
use regime_lattice::synth::{sample_cluster_dgp, ClusterDgpSpec};

fn main() -> regime_lattice::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(1200);
    let bk: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2.4);
    let sample = sample_cluster_dgp(&ClusterDgpSpec::partition(n, bk, 11))?;

    let cfg = CvConfig { seeds: vec![0, 1, 2], pool: PoolConfig::canonical(), ..Default::default() };
    let data = CvData::new(&sample.features, &sample.losses);
    let (report, log) = strict_nested_cv_audited(&cfg, data)?;

    for f in &report.families {
        println!("{:<16} {:?}  {:.4}", f.name, f.class, f.mean.unwrap_or(f64::NAN));
    }
    println!();
    print!("{}", per_class_table(&report).render());
    println!("selection bound {:.4} at n_in = {}", report.selection_bound, report.n_in);

    let count = |p: Phase| log.iter().filter(|a| a.phase == p).count();
    println!(
        "audit: {} selection, {} refit and {} evaluation accesses",
        count(Phase::Select),
        count(Phase::Refit),
        count(Phase::Evaluate)
    );
    Ok(())
}
