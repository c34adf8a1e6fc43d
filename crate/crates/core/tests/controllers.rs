use proptest::prelude::*;
use regime_lattice::controllers::cart::cart_tree;
use regime_lattice::controllers::kmeans::{kmeans, nearest};
use regime_lattice::controllers::{
    cell_actions, FairFixedPolicy, FamilyEntry, FamilySpec, FeatureMatrix, FixedPolicy, KMeansRouter, Policy,
    PolicyClass, PolicyInput, PoolConfig, PriorChannel, PriorGatedPolicy, SelectivePlugin, Standardizer, ThresholdGate,
};
use regime_lattice::cv::{complement, make_folds};
use regime_lattice::synth::{sample_cluster_dgp, ClusterDgpSpec};
use regime_lattice::loss::policy_risk;
use regime_lattice::{ActionSet, LossMatrix};

fn lm(rows: Vec<Vec<f64>>, labels: &[&str]) -> LossMatrix {
    LossMatrix::new(rows, ActionSet::new(labels.iter().copied()).unwrap()).unwrap()
}

#[test]
fn every_pool_family_fits_and_predicts_valid_actions() {
    let s = sample_cluster_dgp(&ClusterDgpSpec::partition(400, 1.6, 3)).unwrap();
    let input = PolicyInput::with_prior(&s.features, &s.prior);
    let mut pool = PoolConfig::extended();
    pool.families.push(FamilyEntry::new(FamilySpec::Logistic { c: 1.0 }));
    pool.families.push(FamilyEntry::new(FamilySpec::PriorGated {
        tau: 1.0,
        high: "direct".into(),
        low: "defer".into(),
        fallback: Box::new(FamilySpec::Kmeans { k: 4, min_cell: 5 }),
    }));
    pool.validate().unwrap();
    for entry in &pool.families {
        let mut p = entry.build().unwrap();
        assert_eq!(p.class_tag(), entry.class(), "{}", p.family_name());
        assert!(p.predict(input).is_err(), "{} predicted before fit", p.family_name());
        p.fit(input, &s.losses, 11).unwrap();
        let a = p.predict(input).unwrap();
        assert_eq!(a.len(), 400);
        assert!(a.iter().all(|&x| x < 2), "{}", p.family_name());

        let mut again = entry.build().unwrap();
        again.fit(input, &s.losses, 11).unwrap();
        assert_eq!(again.predict(input).unwrap(), a, "{} is not reproducible", p.family_name());
    }
}

#[test]
fn fixed_policies() {
    let m = lm(vec![vec![0.2, 0.5, 0.9], vec![0.8, 0.5, 0.0], vec![0.7, 0.5, 0.4]], &["direct", "defer", "abstain"]);
    let x = FeatureMatrix::from_rows(vec![vec![0.0]; 3]).unwrap();
    let mut f = FairFixedPolicy::new();
    f.fit(PolicyInput::new(&x), &m, 0).unwrap();
    // Column means 0.567, 0.5, 0.433.
    assert_eq!(f.action(), Some(2));
    assert_eq!(f.predict(PolicyInput::new(&x)).unwrap(), vec![2; 3]);

    let mut d = FixedPolicy::new("defer");
    d.fit(PolicyInput::new(&x), &m, 0).unwrap();
    assert_eq!(d.predict(PolicyInput::new(&x)).unwrap(), vec![1; 3]);
    assert!(FixedPolicy::new("retrieve").fit(PolicyInput::new(&x), &m, 0).is_err());
}

#[test]
fn shape_mismatch_is_rejected() {
    let m = lm(vec![vec![0.0, 1.0]; 4], &["direct", "defer"]);
    let x = FeatureMatrix::from_rows(vec![vec![0.0, 1.0]; 5]).unwrap();
    assert!(KMeansRouter::new(2).fit(PolicyInput::new(&x), &m, 0).is_err());
    assert!(SelectivePlugin::new(0.3).fit(PolicyInput::new(&x), &m, 0).is_err());
}

#[test]
fn kmeans_router_recovers_cluster_actions() {
    // Wide margins so each true cluster has an unambiguous best action.
    let mut spec = ClusterDgpSpec::partition(2000, 0.0, 5);
    spec.bump = vec![3.0, -3.0, 3.0, -3.0];
    let s = sample_cluster_dgp(&spec).unwrap();
    // One farthest-point start can settle in a local optimum, so ask for most seeds.
    let recovered = (0..6)
        .filter(|&seed| {
            let mut r = KMeansRouter::new(4);
            r.fit(PolicyInput::new(&s.features), &s.losses, seed).unwrap();
            let pred = r.predict(PolicyInput::new(&s.features)).unwrap();
            s.cells.iter().zip(&pred).filter(|(&g, &a)| a == g % 2).count() >= 1980
        })
        .count();
    assert!(recovered >= 4, "{recovered} of 6 seeds recovered the cluster actions");
}

#[test]
fn cell_actions_fall_back_for_small_cells() {
    let m = lm(vec![vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]], &["direct", "defer"]);
    assert_eq!(cell_actions(&m, &[0, 0, 0, 1], 3, 1), vec![0, 1, 0]);
    assert_eq!(cell_actions(&m, &[0, 0, 0, 1], 3, 2), vec![0, 0, 0]);
}

#[test]
fn cart_tree_separates_a_threshold() {
    let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i * 7 % 5) as f64]).collect();
    let labels: Vec<usize> = (0..40).map(|i| usize::from(i >= 23)).collect();
    let x = FeatureMatrix::from_rows(rows).unwrap();
    let t = cart_tree(&x, &labels, 2, 3, 1).unwrap();
    assert_eq!(t.predict(&x).unwrap(), labels);
    assert_eq!(t.num_leaves(), 2);
    assert!(cart_tree(&x, &labels, 2, 3, 41).is_err());
    assert!(cart_tree(&x, &labels[..10], 2, 3, 1).is_err());
    // A pure node never splits.
    assert_eq!(cart_tree(&x, &[0; 40], 2, 4, 1).unwrap().num_leaves(), 1);
}

#[test]
fn prior_gated_policy_needs_a_prior_and_a_lower_fallback() {
    let s = sample_cluster_dgp(&ClusterDgpSpec::prior(300, 2.5, 2)).unwrap();
    let mut g = PriorGatedPolicy::new(ThresholdGate::new(1.0, "direct", "defer"), Box::new(FixedPolicy::new("defer"))).unwrap();
    assert!(g.fit(PolicyInput::new(&s.features), &s.losses, 0).is_err());
    g.fit(PolicyInput::with_prior(&s.features, &s.prior), &s.losses, 0).unwrap();
    let pred = g.predict(PolicyInput::with_prior(&s.features, &s.prior)).unwrap();
    for (&z, &a) in s.prior.values().iter().zip(&pred) {
        let want = if z > 1.0 { 0 } else { 1 };
        assert_eq!(a, want);
    }
    let short = PriorChannel::new(vec![0.0; 10]).unwrap();
    assert!(g.predict(PolicyInput::with_prior(&s.features, &short)).is_err());

    let inner = PriorGatedPolicy::new(ThresholdGate::new(1.0, 0usize, 1usize), Box::new(FixedPolicy::new(0usize))).unwrap();
    assert!(PriorGatedPolicy::new(ThresholdGate::new(1.0, 0usize, 1usize), Box::new(inner)).is_err());
}

#[test]
fn pool_validation() {
    let mut pool = PoolConfig::canonical();
    pool.families.push(FamilyEntry::new(FamilySpec::FairFixed));
    assert!(pool.validate().is_err(), "duplicate names must be rejected");

    let mut tagged = FamilyEntry::new(FamilySpec::Kmeans { k: 3, min_cell: 5 });
    tagged.class_tag = Some(PolicyClass::Pi2);
    assert!(PoolConfig { families: vec![tagged] }.validate().is_err());
    assert!(PoolConfig { families: vec![] }.validate().is_err());

    let json = r#"{"family": "hgbc", "max_depth": 2, "name": "shallow"}"#;
    let e: FamilyEntry = serde_json::from_str(json).unwrap();
    assert_eq!(e.display_name().unwrap(), "shallow");
    assert_eq!(e.class(), PolicyClass::Pi2);
    assert!(serde_json::from_str::<FamilyEntry>(r#"{"family": "kmeans", "k": 3, "bogus": 1}"#).is_err());
}

#[test]
fn selective_plugin_beats_fixed_on_a_high_signal_sample() {
    let train = sample_cluster_dgp(&ClusterDgpSpec::partition(1500, 3.5, 1)).unwrap();
    let test = sample_cluster_dgp(&ClusterDgpSpec::partition(4000, 3.5, 2)).unwrap();
    let mut p = SelectivePlugin::new(0.3);
    p.fit(PolicyInput::new(&train.features), &train.losses, 0).unwrap();
    let risk = policy_risk(&test.losses, &p.predict(PolicyInput::new(&test.features)).unwrap()).unwrap();
    let fixed = test.losses.column_means().into_iter().fold(f64::INFINITY, f64::min);
    assert!(risk < fixed - 0.05, "plug-in {risk} vs fixed {fixed}");
}

fn matrix(n: usize, d: usize) -> impl Strategy<Value = FeatureMatrix> {
    prop::collection::vec(-5.0f64..5.0, n * d).prop_map(move |v| FeatureMatrix::from_flat(v, n, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kmeans_sse_never_increases(x in (6usize..40, 1usize..4).prop_flat_map(|(n, d)| matrix(n, d)), k in 1usize..5, seed in any::<u64>()) {
        let km = kmeans(&x, k, seed).unwrap();
        for w in km.sse_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * (1.0 + w[0]));
        }
        for (i, &c) in km.assignment.iter().enumerate() {
            prop_assert_eq!(nearest(&km.centroids, x.row(i)).0, c);
        }
        prop_assert_eq!(km.predict(&x), km.assignment.clone());
    }

    #[test]
    fn folds_partition_the_rows(n in 2usize..300, kappa in 2usize..10, seed in any::<u64>()) {
        prop_assume!(n >= kappa);
        let folds = make_folds(n, kappa, seed).unwrap();
        prop_assert_eq!(folds.len(), kappa);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for k in 0..kappa {
            prop_assert_eq!(complement(&folds, k).len() + folds[k].len(), n);
        }
        prop_assert_eq!(make_folds(n, kappa, seed).unwrap(), folds);
    }

    #[test]
    fn standardizer_centres_training_columns(x in (3usize..30, 1usize..4).prop_flat_map(|(n, d)| matrix(n, d))) {
        let z = Standardizer::fit(&x).unwrap().transform(&x).unwrap();
        for j in 0..z.d() {
            let col = z.column(j);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            prop_assert!(mean.abs() < 1e-9);
        }
    }
}
