use std::path::{Path, PathBuf};
use std::process::Command;

use regime_lattice::controllers::{FeatureMatrix, PoolConfig};
use regime_lattice::io::app::{run_cv, run_diagnose, synth_cmd, SynthArgs, SynthKind};
use regime_lattice::io::csv::{read_components, read_features, read_losses, write_components, write_features, write_losses};
use regime_lattice::io::report::{read_json, render_diagnose, to_json, StoredReport};
use regime_lattice::io::{load_dataset, parse_weights, Dataset, DatasetPaths, RunConfig};
use regime_lattice::loss::assemble_loss;
use regime_lattice::synth::{sample_cluster_dgp, ClusterDgpSpec};
use regime_lattice::{ActionSet, Error, LossComponents, Weights};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/four_action").join(name)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn tiny_components() -> LossComponents {
    let actions = ActionSet::new(["direct", "defer", "abstain"]).unwrap();
    LossComponents::new(
        actions,
        vec![vec![true, true, false], vec![false, true, false], vec![true, false, false]],
        vec![vec![0.0, 0.5, 0.0], vec![1.0, 0.0, 0.0], vec![0.1 + 0.2, 1.0, 0.0]],
        vec![vec![1.0, 2.3, 0.0], vec![1.0, 2.3, 0.0], vec![1.0, 2.3, 0.0]],
    )
    .unwrap()
}

#[test]
fn three_row_files_round_trip_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let x = FeatureMatrix::from_rows(vec![vec![0.1 + 0.2, -1e-300, 3.0], vec![1.0 / 3.0, 2.5e17, -0.0], vec![f64::MIN_POSITIVE, 7.0, 1e-7]])
        .unwrap();
    let comps = tiny_components();
    let losses = assemble_loss(&comps, &Weights::default()).unwrap();
    let dc = comps.direct_correct();

    write_features(&dir.path().join("f.csv"), &x).unwrap();
    write_losses(&dir.path().join("l.csv"), &losses, Some(&dc)).unwrap();
    write_components(&dir.path().join("c.csv"), &comps).unwrap();

    let x2 = read_features(&dir.path().join("f.csv")).unwrap();
    for i in 0..3 {
        let (a, b): (Vec<u64>, Vec<u64>) =
            (x.row(i).iter().map(|v| v.to_bits()).collect(), x2.row(i).iter().map(|v| v.to_bits()).collect());
        assert_eq!(a, b);
    }
    let (l2, dc2) = read_losses(&dir.path().join("l.csv")).unwrap();
    assert_eq!(dc2.as_deref(), Some(&dc[..]));
    for i in 0..3 {
        for a in 0..3 {
            assert_eq!(losses.get(i, a).to_bits(), l2.get(i, a).to_bits());
        }
    }
    assert_eq!(read_components(&dir.path().join("c.csv")).unwrap(), comps);
}

#[test]
fn components_path_matches_precomputed_losses() {
    let dir = tempfile::tempdir().unwrap();
    let comps = read_components(&fixture("components.csv")).unwrap();
    let losses = assemble_loss(&comps, &Weights::default()).unwrap();
    // Independent assembly: 1 - c + h + 0.05 k per cell.
    let text = std::fs::read_to_string(fixture("components.csv")).unwrap();
    let mut csv_text = String::from("loss_direct,loss_retrieve,loss_defer,loss_abstain,c_direct\n");
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        let l: Vec<String> = (0..4).map(|a| (1.0 - v[a] + v[4 + a] + 0.05 * v[8 + a]).to_string()).collect();
        csv_text.push_str(&format!("{},{}\n", l.join(","), v[0]));
    }
    let lpath = write(dir.path(), "losses.csv", &csv_text);

    let from_losses =
        load_dataset(&DatasetPaths { features: fixture("features.csv"), losses: Some(lpath), ..Default::default() }, &Weights::default())
            .unwrap();
    let from_comps = load_dataset(
        &DatasetPaths { features: fixture("features.csv"), components: Some(fixture("components.csv")), ..Default::default() },
        &Weights::default(),
    )
    .unwrap();
    assert_eq!(from_comps.direct_correct, from_losses.direct_correct);
    for i in 0..losses.n() {
        for a in 0..4 {
            assert!((from_losses.losses.get(i, a) - from_comps.losses.get(i, a)).abs() < 1e-12);
        }
    }
    assert_eq!(from_comps.losses, losses);
}

#[test]
fn direct_loss_decomposes_into_components() {
    // Mean direct loss = (1 - accuracy) + mean risk + 0.05.
    let n = 5000;
    let correct = 4153; // accuracy 0.8306
    let actions = ActionSet::new(["direct", "abstain"]).unwrap();
    let risk_total = 0.1944 * n as f64;
    let comps = LossComponents::new(
        actions,
        (0..n).map(|i| vec![i < correct, false]).collect(),
        (0..n).map(|_| vec![risk_total / n as f64, 0.0]).collect(),
        (0..n).map(|_| vec![1.0, 0.0]).collect(),
    )
    .unwrap();
    let m = assemble_loss(&comps, &Weights::default()).unwrap();
    assert!((m.column_means()[0] - 0.4138).abs() < 1e-4);
}

#[test]
fn schema_and_value_errors_carry_locations() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.csv", "x\n1\n2\n3\n");

    let no_h = write(dir.path(), "c.csv", "c_direct,c_abstain,k_direct,k_abstain\n1,0,1,0\n0,0,1,0\n1,0,1,0\n");
    let e = read_components(&no_h).unwrap_err();
    assert!(matches!(&e, Error::Schema { message, .. } if message.contains("h_direct")), "{e}");
    assert!(e.is_validation());

    let bad = write(dir.path(), "l.csv", "loss_direct,loss_abstain\n0.1,1\n0.2,inf\n0.3,1\n");
    match read_losses(&bad).unwrap_err() {
        Error::Cell { row, column, .. } => assert_eq!((row, column.as_str()), (2, "loss_abstain")),
        e => panic!("unexpected {e}"),
    }
    let text = write(dir.path(), "t.csv", "loss_direct,loss_abstain\n0.1,1\n0.2,x\n0.3,1\n");
    assert!(matches!(read_losses(&text).unwrap_err(), Error::Cell { row: 2, .. }));

    let short = write(dir.path(), "s.csv", "loss_direct,loss_abstain\n0.1,1\n0.2,1\n");
    let e = load_dataset(&DatasetPaths { features: f.clone(), losses: Some(short), ..Default::default() }, &Weights::default())
        .unwrap_err();
    assert!(matches!(e, Error::Shape(_)), "{e}");

    let bad_c = write(dir.path(), "bc.csv", "loss_direct,loss_abstain,c_direct\n0.1,1,1\n0.2,1,2\n0.3,1,0\n");
    assert!(matches!(read_losses(&bad_c).unwrap_err(), Error::Cell { row: 2, .. }));

    let both = DatasetPaths { features: f.clone(), losses: Some(bad_c.clone()), components: Some(no_h), prior: None };
    assert!(load_dataset(&both, &Weights::default()).is_err());
    let none = DatasetPaths { features: f, ..Default::default() };
    assert!(load_dataset(&none, &Weights::default()).is_err());
}

#[test]
fn weights_flag_parses_three_values() {
    assert_eq!(parse_weights("1,1,0.05").unwrap(), Weights::default());
    assert!(parse_weights("1,1").is_err());
    assert!(parse_weights("1,x,0").is_err());
    assert!(parse_weights("1,-1,0").is_err());
}

fn cluster_dataset(n: usize, bk: f64) -> Dataset {
    let s = sample_cluster_dgp(&ClusterDgpSpec::partition(n, bk, 21)).unwrap();
    Dataset::new("cluster", s.features, s.losses).unwrap().with_direct_correct(s.direct_correct).unwrap()
}

#[test]
fn margin_free_dataset_renders_a_dash_for_n_min() {
    // Features carry no information about correctness and deferring costs
    // 0.9, so the break-even AUC is far above anything attainable.
    let s = sample_cluster_dgp(&ClusterDgpSpec::partition(400, 0.0, 21)).unwrap();
    let noise = sample_cluster_dgp(&ClusterDgpSpec::partition(400, 0.0, 99)).unwrap();
    let flat: Vec<Vec<f64>> = (0..400).map(|i| vec![noise.features.row(i)[5]]).collect();
    let rows: Vec<Vec<f64>> = s.direct_correct.iter().map(|&c| vec![if c { 0.0 } else { 1.0 }, 0.9]).collect();
    let losses = regime_lattice::LossMatrix::new(rows, s.losses.actions().clone()).unwrap();
    let d = Dataset::new("flat", FeatureMatrix::from_rows(flat).unwrap(), losses)
        .unwrap()
        .with_direct_correct(s.direct_correct)
        .unwrap();
    let cfg = RunConfig { fallback: "defer".into(), ..Default::default() };
    let report = run_diagnose(&d, &cfg).unwrap();
    assert!(report.diagnostics.viability.beta <= 0.0, "beta = {}", report.diagnostics.viability.beta);
    let table = render_diagnose(&report);
    let row = table.lines().nth(1).unwrap();
    assert!(row.contains('—'), "{table}");
    for col in ["n", "α_emp", "β", "nβ²", "n_min", "C_Π1", "C_Π2", "predicted"] {
        assert!(table.lines().next().unwrap().contains(col));
    }
}

#[test]
fn empty_candidate_list_renders_zero_with_note() {
    let d = cluster_dataset(300, 1.0);
    let cfg = RunConfig { fallback: "defer".into(), k_grid: vec![], ..Default::default() };
    let report = run_diagnose(&d, &cfg).unwrap();
    assert_eq!(report.diagnostics.c_pi1, 0.0);
    let table = render_diagnose(&report);
    assert!(table.contains("no candidate partition"), "{table}");
}

#[test]
fn diagnose_needs_correctness_and_a_known_fallback() {
    let s = sample_cluster_dgp(&ClusterDgpSpec::partition(100, 1.0, 1)).unwrap();
    let d = Dataset::new("x", s.features, s.losses).unwrap();
    assert!(run_diagnose(&d, &RunConfig { fallback: "defer".into(), ..Default::default() }).is_err());
    let d = cluster_dataset(100, 1.0);
    assert!(run_diagnose(&d, &RunConfig::default()).is_err());
}

#[test]
fn fixed_only_pool_has_zero_seed_sd_and_report_round_trips() {
    let d = cluster_dataset(200, 1.0);
    let pool: PoolConfig =
        serde_json::from_str(r#"{"families":[{"family":"always_action","action":"direct"},{"family":"always_action","action":"defer"}]}"#)
            .unwrap();
    let cfg = RunConfig { fallback: "defer".into(), pool, seeds: vec![0, 1, 2], ..Default::default() };
    let report = run_cv(&d, &cfg).unwrap();
    for f in &report.families {
        assert_eq!(f.sd, Some(0.0), "{}", f.name);
    }
    assert!(report.predicted_class.is_some());

    let dir = tempfile::tempdir().unwrap();
    let stored = StoredReport::Cv(report);
    let path = write(dir.path(), "cv.json", &to_json(&stored).unwrap());
    assert_eq!(read_json::<StoredReport>(&path).unwrap(), stored);
}

#[test]
fn canonical_pool_flags_pi2_on_a_high_signal_sample() {
    let d = cluster_dataset(2400, 2.4);
    let cfg = RunConfig { fallback: "defer".into(), seeds: vec![0, 1], ..Default::default() };
    let report = run_cv(&d, &cfg).unwrap();
    let table = regime_lattice::cv::per_class_table(&report);
    assert_eq!(table.winner().unwrap().class, regime_lattice::controllers::PolicyClass::Pi2);
}

#[test]
fn synth_outputs_have_the_grid_shape() {
    let dir = tempfile::tempdir().unwrap();
    let args = SynthArgs { kind: SynthKind::Bernstein, seed: 0, replications: None, out_dir: dir.path().join("b") };
    synth_cmd(&args).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("b/bernstein.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 14 * 3);

    let args = SynthArgs { kind: SynthKind::Pi3, seed: 0, replications: None, out_dir: dir.path().join("p") };
    synth_cmd(&args).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("p/pi3.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().contains("winner"));
    assert_eq!(lines.count(), 5 * 6);
    assert!(dir.path().join("p/manifest.json").exists());

    let again = dir.path().join("b2");
    synth_cmd(&SynthArgs { kind: SynthKind::Bernstein, seed: 0, replications: None, out_dir: again.clone() }).unwrap();
    assert_eq!(
        std::fs::read(dir.path().join("b/bernstein.csv")).unwrap(),
        std::fs::read(again.join("bernstein.csv")).unwrap()
    );
}

fn regime(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_regime")).args(args).output().unwrap()
}

#[test]
fn binary_exit_codes_and_report_rerender() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let (f, c) = (fixture("features.csv"), fixture("components.csv"));
    let o = regime(&["diagnose", "--features", f.to_str().unwrap(), "--components", c.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let printed = String::from_utf8(o.stdout).unwrap();

    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "diagnose");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);

    let o = regime(&["report", out.join("diagnose.json").to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap(), printed);

    let o = regime(&["diagnose", "--features", f.to_str().unwrap(), "--components", c.to_str().unwrap(), "--q", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = regime(&["diagnose", "--features", "/no/such/file.csv", "--losses", "/no/such/l.csv"]);
    assert_eq!(o.status.code(), Some(2));
    let o = regime(&["synth", "nope"]);
    assert_eq!(o.status.code(), Some(2));

    // A pool whose only family cannot fit is a runtime failure.
    let pool = write(dir.path(), "pool.json", r#"{"families":[{"family":"kmeans","k":5000}]}"#);
    let o = regime(&[
        "cv",
        "--features",
        f.to_str().unwrap(),
        "--components",
        c.to_str().unwrap(),
        "--pool-config",
        pool.to_str().unwrap(),
        "--out-dir",
        dir.path().join("cv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn run_config_json_defaults_and_unknown_fields() {
    let cfg: RunConfig = serde_json::from_str(r#"{"q": 0.2}"#).unwrap();
    assert_eq!(cfg.q, 0.2);
    assert_eq!(cfg.weights, Weights::default());
    assert_eq!(cfg.seeds, vec![0, 1, 2, 3, 4]);
    assert!(serde_json::from_str::<RunConfig>(r#"{"qq": 0.2}"#).is_err());
}
