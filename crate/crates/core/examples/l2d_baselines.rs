//! Two learning-to-defer baselines next to the selective plug-in rule and a
//! boosted classifier, under plain 5-fold CV on the fixture.
//!
//! cargo run --release --example l2d_baselines

use std::path::Path;

use regime_lattice::controllers::{HgbcPolicy, MozannarPolicy, NarasimhanPolicy, Policy, PolicyInput, SelectivePlugin};
use regime_lattice::cv::{complement, make_folds};
use regime_lattice::io::{load_dataset, DatasetPaths};
use regime_lattice::Weights;

fn main() -> regime_lattice::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/four_action");
    let paths = DatasetPaths {
        features: dir.join("features.csv"),
        components: Some(dir.join("components.csv")),
        ..Default::default()
    };
    let data = load_dataset(&paths, &Weights::default())?;
    let folds = make_folds(data.n(), 5, 3)?;

    let makers: Vec<fn() -> Box<dyn Policy>> = vec![
        || Box::new(MozannarPolicy::new(0.3)),
        || Box::new(NarasimhanPolicy::new(3)),
        || Box::new(SelectivePlugin::new(0.3)),
        || Box::new(HgbcPolicy::new(3)),
    ];
    for make in makers {
        let mut total = 0.0;
        let mut name = String::new();
        for (k, test) in folds.iter().enumerate() {
            let train = complement(&folds, k);
            let xtr = data.features.subset(&train);
            let mut p = make();
            p.fit(PolicyInput::new(&xtr), &data.losses.subset(&train), k as u64)?;
            let pred = p.predict(PolicyInput::new(&data.features.subset(test)))?;
            total += test.iter().zip(pred).map(|(&i, a)| data.losses.get(i, a)).sum::<f64>();
            name = p.family_name().to_owned();
        }
        println!("{name:<16} {:.4}", total / data.n() as f64);
    }
    Ok(())
}
