//! Acceptance criteria. Runs without the libtest harness so every criterion
//! prints one PASS/FAIL line even when output capture is on.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::Rng as _;
use regime_lattice::controllers::{FamilyEntry, FamilySpec, PolicyClass, PolicyInput, PoolConfig};
use regime_lattice::cv::{inner_select, outer_folds_for, strict_nested_cv_audited, CvConfig, CvData, Phase};
use regime_lattice::diagnostics::{bernstein_n_min, partition_diagnostics, residual_report, selection_bound};
use regime_lattice::io::csv::read_cells;
use regime_lattice::io::{load_dataset, DatasetPaths};
use regime_lattice::loss::{best_fixed_action, policy_risk};
use regime_lattice::synth::{
    bernstein_sweep, phase_sweep, sample_cluster_dgp, BernsteinSweepSpec, ClusterDgpSpec, PhaseSweepSpec,
};
use regime_lattice::{rng, ActionSet, LossMatrix, Weights};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/four_action")
}

fn n_min_goldens() -> Outcome {
    let cases: [(&str, f64, f64, u64, u64); 6] = [
        ("high-signal", 0.722, 0.469, 23, 0),
        ("boundary", 0.874, 0.246, 45, 0),
        ("variance-bounded", 0.687, 0.0528, 1898, 1),
        ("beta=0.05", 0.75, 0.05, 1844, 1),
        ("beta=0.10", 0.75, 0.10, 461, 1),
        ("beta=0.20", 0.75, 0.20, 115, 1),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, alpha, beta, want, tol) in cases {
        let got = bernstein_n_min(alpha, beta, 0.3, 0.05).map_err(|e| e.to_string())?;
        ok &= got.abs_diff(want) <= tol;
        parts.push(format!("{name} {got} (want {want}±{tol})"));
    }
    check(ok, parts.join(", "))
}

/// P(Bin(m, alpha) > m (alpha - beta)).
fn binomial_sign_rate(m: usize, alpha: f64, beta: f64) -> f64 {
    let threshold = m as f64 * (alpha - beta);
    let mut log_c = 0.0_f64;
    let mut total = 0.0;
    for k in 0..=m {
        if k > 0 {
            log_c += ((m - k + 1) as f64).ln() - (k as f64).ln();
        }
        if k as f64 > threshold {
            total += (log_c + k as f64 * alpha.ln() + (m - k) as f64 * (1.0 - alpha).ln()).exp();
        }
    }
    total
}

fn bernstein_sweep_criterion() -> Outcome {
    let spec = BernsteinSweepSpec::default();
    let sweep = bernstein_sweep(&spec).map_err(|e| e.to_string())?;
    let reps = spec.replications as f64;
    let floor = 0.95 - 2.0 / reps.sqrt();
    let mut ok = true;
    let mut parts = Vec::new();
    for &beta in &spec.beta_grid {
        let cells: Vec<_> = sweep.cells.iter().filter(|c| c.beta == beta).collect();
        let n_min = cells[0].n_min;
        let above = cells.iter().filter(|c| c.n as u64 >= n_min).map(|c| c.rate).fold(f64::INFINITY, f64::min);
        let smallest = cells.iter().min_by_key(|c| c.n).expect("grid");
        let below_ok = (smallest.n as f64) < n_min as f64 / 4.0 && smallest.rate <= 0.90;
        ok &= above >= floor && below_ok;
        parts.push(format!(
            "beta={beta}: n_min={n_min}, min rate above {above:.3}{}, rate at n={} {:.3}",
            if above >= 0.95 { "" } else { " (below 0.95, above floor)" },
            smallest.n,
            smallest.rate
        ));
    }
    // Every cell against the exact binomial probability, 4.5 standard errors.
    for c in &sweep.cells {
        let p = binomial_sign_rate(c.m, spec.alpha, c.beta);
        let se = (p * (1.0 - p) / reps).sqrt().max(1.0 / reps);
        if (c.rate - p).abs() > 4.5 * se {
            ok = false;
            parts.push(format!("n={} beta={}: rate {} vs exact {p:.4}", c.n, c.beta, c.rate));
        }
    }
    parts.push(format!("floor {floor:.3}"));
    check(ok, parts.join("; "))
}

/// Continuous losses, or losses on a grid of `levels` values in [0, 1].
/// Two levels make every residual gap equal.
fn random_matrix(r: &mut rng::Rng, levels: u8) -> LossMatrix {
    let rows = (0..50)
        .map(|_| {
            (0..4)
                .map(|_| match levels {
                    0 => r.random_range(0.0..2.0),
                    l => f64::from(r.random_range(0..l)) / f64::from(l - 1),
                })
                .collect()
        })
        .collect();
    LossMatrix::new(rows, ActionSet::canonical()).expect("valid matrix")
}

fn residual_bound_property() -> Outcome {
    let mut r = rng::rng(2024);
    let (mut equal_cases, mut strict_cases, mut worst) = (0usize, 0usize, f64::INFINITY);
    for t in 0..1000 {
        let m = random_matrix(&mut r, [0, 2, 3][t % 3]);
        let res = residual_report(&m);
        let (a_star, fixed) = best_fixed_action(&m);
        let oracle = m.row_argmin();
        let mut assignments = vec![oracle.clone()];
        assignments.extend((0..4).map(|a| vec![a; 50]));
        assignments.extend((0..5).map(|_| (0..50).map(|_| r.random_range(0..4)).collect::<Vec<_>>()));
        // Partition routers on random cells.
        for _ in 0..3 {
            let cells: Vec<usize> = (0..50).map(|_| r.random_range(0..4)).collect();
            let mut sums = [[0.0; 4]; 4];
            for (i, &g) in cells.iter().enumerate() {
                for a in 0..4 {
                    sums[g][a] += m.get(i, a);
                }
            }
            let best: Vec<usize> = sums.iter().map(|s| regime_lattice::loss::argmin(s)).collect();
            assignments.push(cells.iter().map(|&g| best[g]).collect());
        }
        for asg in &assignments {
            let gain = fixed - policy_risk(&m, asg).map_err(|e| e.to_string())?;
            worst = worst.min(res.bound - gain);
            if gain > res.bound + 1e-12 {
                return Err(format!("instance {t}: gain {gain} exceeds bound {}", res.bound));
            }
        }
        let oracle_gain = fixed - policy_risk(&m, &oracle).map_err(|e| e.to_string())?;
        // Independent residual scan for the equality condition.
        let gaps: Vec<f64> = m
            .rows()
            .iter()
            .map(|row| row[a_star] - row.iter().copied().fold(f64::INFINITY, f64::min))
            .filter(|&g| g > 0.0)
            .collect();
        let sup = gaps.iter().copied().fold(0.0, f64::max);
        let all_at_sup = gaps.iter().all(|&g| (g - sup).abs() <= 1e-12);
        let equal = (oracle_gain - res.bound).abs() <= 1e-12;
        if equal != all_at_sup {
            return Err(format!("instance {t}: equality {equal} but all-at-sup {all_at_sup}"));
        }
        equal_cases += usize::from(equal);
        strict_cases += usize::from(!equal);
    }
    check(
        equal_cases > 0 && strict_cases > 0,
        format!("1000 matrices, min slack {worst:.4}; oracle gain equals the bound in {equal_cases} cases, exactly those with every residual gap at the sup"),
    )
}

fn partition_identity() -> Outcome {
    let mut r = rng::rng(77);
    let mut worst = 0.0_f64;
    for t in 0..1000 {
        let n = r.random_range(20..120);
        let a = r.random_range(2..6);
        let k = r.random_range(1..8).min(n);
        let labels: Vec<String> = (0..a).map(|i| format!("a{i}")).collect();
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..a).map(|_| r.random_range(0.0..3.0)).collect()).collect();
        let m = LossMatrix::new(rows, ActionSet::new(labels).expect("labels")).expect("matrix");
        // Every cell non-empty: first k rows seed the cells.
        let cells: Vec<usize> = (0..n).map(|i| if i < k { i } else { r.random_range(0..k) }).collect();
        let d = partition_diagnostics(&m, &cells, 0.05, 5).map_err(|e| e.to_string())?;
        let means = m.column_means();
        let a_star = regime_lattice::loss::argmin(&means);
        let mut oracle = 0.0;
        for g in 0..k {
            let members: Vec<usize> = (0..n).filter(|&i| cells[i] == g).collect();
            let best = (0..a)
                .map(|b| members.iter().map(|&i| m.get(i, b)).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            oracle += best;
        }
        let identity = means[a_star] - oracle / n as f64;
        let err = (d.total_gain - identity).abs();
        worst = worst.max(err);
        if err > 1e-12 {
            return Err(format!("instance {t}: total gain {} vs risk difference {identity}", d.total_gain));
        }
    }
    let dir = fixture_dir();
    let paths = DatasetPaths {
        features: dir.join("features.csv"),
        components: Some(dir.join("components.csv")),
        ..Default::default()
    };
    let data = load_dataset(&paths, &Weights::default()).map_err(|e| e.to_string())?;
    let cells = read_cells(&dir.join("cells.csv")).map_err(|e| e.to_string())?;
    let d = partition_diagnostics(&data.losses, &cells, 0.05, 5).map_err(|e| e.to_string())?;
    let rounded = (d.total_gain * 1000.0).round() / 1000.0;
    check(
        rounded == 0.047 && (d.max_cell_gain - d.total_gain).abs() < 1e-12,
        format!("max identity error {worst:.1e}; fixture total gain {:.4} (rounds to {rounded})", d.total_gain),
    )
}

fn phase_transition_sweep() -> Outcome {
    let sweep = phase_sweep(&PhaseSweepSpec::pi12()).map_err(|e| e.to_string())?;
    let (w2, t2) = sweep.wins(PolicyClass::Pi2, |c| c.knob >= 1.0);
    let (w1, t1) = sweep.wins(PolicyClass::Pi1, |c| c.knob <= 0.5);
    let (w1big, t1big) = sweep.wins(PolicyClass::Pi1, |c| c.knob <= 0.5 && c.n >= 300);
    check(
        w2 == t2 && t2 == 24 && w1 >= 8 && t1 == 12 && w1big >= 8,
        format!("Pi2 {w2}/{t2} at bk >= 1; Pi1 {w1}/{t1} at bk <= 0.5 ({w1big}/{t1big} with n >= 300)"),
    )
}

fn prior_channel_sweep() -> Outcome {
    let spec = PhaseSweepSpec::pi3();
    let sweep = phase_sweep(&spec).map_err(|e| e.to_string())?;
    let (w2, t2) = sweep.wins(PolicyClass::Pi2, |c| c.knob <= 0.5);
    let (w3, t3) = sweep.wins(PolicyClass::Pi3, |c| c.knob >= 1.0);
    let n_top = *spec.n_grid.iter().max().expect("grid");
    let band: Vec<f64> = sweep.cells.iter().filter(|c| c.n == n_top && c.knob >= 1.0).map(|c| c.losses[1]).collect();
    let in_band = band.iter().all(|l| (0.21..=0.26).contains(l));
    let shown: Vec<String> = band.iter().map(|l| format!("{l:.3}")).collect();
    check(
        w2 == t2 && t2 == 10 && w3 == t3 && t3 == 20 && in_band,
        format!("Pi2 {w2}/{t2} at z <= 0.5; Pi3 {w3}/{t3} at z >= 1; n={n_top} Pi3 losses [{}]", shown.join(", ")),
    )
}

fn six_family_pool() -> PoolConfig {
    let e = |spec| FamilyEntry::new(spec);
    PoolConfig {
        families: vec![
            e(FamilySpec::AlwaysAction { action: "direct".into() }),
            e(FamilySpec::FairFixed),
            e(FamilySpec::Kmeans { k: 4, min_cell: 3 }),
            e(FamilySpec::Cart { max_depth: 3, min_samples_leaf: 5 }),
            e(FamilySpec::Selective { c: 0.3 }),
            e(FamilySpec::Hgbc { max_depth: 3, n_rounds: None, learning_rate: None }),
        ],
    }
}

fn selection_oracle() -> Outcome {
    let pool = six_family_pool();
    let names = pool.names().map_err(|e| e.to_string())?;
    let test = sample_cluster_dgp(&ClusterDgpSpec::partition(20_000, 1.6, 999)).map_err(|e| e.to_string())?;
    let (n, inner) = (600, 5);
    let (mut auto_sum, mut best_sum) = (0.0, 0.0);
    for run in 0..20u64 {
        let train = sample_cluster_dgp(&ClusterDgpSpec::partition(n, 1.6, 1000 + run)).map_err(|e| e.to_string())?;
        let data = CvData::new(&train.features, &train.losses);
        let pick = inner_select(&pool, data, inner, run).map_err(|e| e.to_string())?;
        let mut risks = Vec::new();
        for entry in &pool.families {
            let mut p = entry.build().map_err(|e| e.to_string())?;
            p.fit(PolicyInput::new(&train.features), &train.losses, run).map_err(|e| e.to_string())?;
            let pred = p.predict(PolicyInput::new(&test.features)).map_err(|e| e.to_string())?;
            risks.push(policy_risk(&test.losses, &pred).map_err(|e| e.to_string())?);
        }
        let idx = names.iter().position(|nm| *nm == pick).expect("picked family is in the pool");
        auto_sum += risks[idx];
        best_sum += risks.iter().copied().fold(f64::INFINITY, f64::min);
    }
    let (auto, best) = (auto_sum / 20.0, best_sum / 20.0);
    let bound = selection_bound(pool.families.len(), n / inner, test.losses.l_max());
    check(
        auto <= best + bound,
        format!("mean auto-pick risk {auto:.4} <= best family {best:.4} + bound {bound:.4} (excess {:.4})", auto - best),
    )
}

fn strictness_audit() -> Outcome {
    let sample = sample_cluster_dgp(&ClusterDgpSpec::partition(400, 1.6, 3)).map_err(|e| e.to_string())?;
    let cfg = CvConfig { seeds: vec![0, 1, 2], ..Default::default() };
    let (_, log) = strict_nested_cv_audited(&cfg, CvData::new(&sample.features, &sample.losses)).map_err(|e| e.to_string())?;
    let n = sample.losses.n();
    let mut counts = [0usize; 3];
    for a in &log {
        let folds = outer_folds_for(n, cfg.outer_folds, a.seed).map_err(|e| e.to_string())?;
        let test = &folds[a.fold];
        let mut in_test = vec![false; n];
        for &i in test {
            in_test[i] = true;
        }
        match a.phase {
            Phase::Select | Phase::Refit => {
                if let Some(i) = a.rows.iter().find(|&&i| in_test[i]) {
                    return Err(format!("{:?} read outer-test row {i} (seed {}, fold {})", a.phase, a.seed, a.fold));
                }
                counts[if a.phase == Phase::Select { 0 } else { 1 }] += 1;
            }
            Phase::Evaluate => {
                if a.rows != *test {
                    return Err(format!("evaluation rows differ from the outer-test fold (seed {}, fold {})", a.seed, a.fold));
                }
                counts[2] += 1;
            }
        }
    }
    let cells = cfg.seeds.len() * cfg.outer_folds;
    check(
        counts[0] >= cells && counts[1] >= cells && counts[2] >= cells,
        format!("{} accesses: {} select, {} refit, {} evaluate, zero outer-test reads", log.len(), counts[0], counts[1], counts[2]),
    )
}

fn run_all(out: &Path) -> Result<(), String> {
    let bin = env!("CARGO_BIN_EXE_regime");
    let dir = fixture_dir();
    let (features, components) = (dir.join("features.csv"), dir.join("components.csv"));
    let data_args = |sub: &str| {
        vec![
            sub.to_owned(),
            "--features".into(),
            features.display().to_string(),
            "--components".into(),
            components.display().to_string(),
            "--seeds".into(),
            "0,1".into(),
            "--out-dir".into(),
            out.join(sub).display().to_string(),
        ]
    };
    let mut runs = vec![data_args("diagnose"), data_args("cv")];
    for kind in ["bernstein", "pi12", "pi3"] {
        runs.push(vec!["synth".into(), kind.into(), "--out-dir".into(), out.join(kind).display().to_string()]);
    }
    for args in runs {
        let o = Command::new(bin).args(&args).output().map_err(|e| e.to_string())?;
        if !o.status.success() {
            return Err(format!("`regime {}` failed: {}", args.join(" "), String::from_utf8_lossy(&o.stderr)));
        }
    }
    Ok(())
}

fn files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).expect("readable dir").flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).expect("under root").to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_all(&a)?;
    run_all(&b)?;
    let (fa, fb) = (files(&a), files(&b));
    if fa != fb {
        return Err(format!("file sets differ: {fa:?} vs {fb:?}"));
    }
    for f in &fa {
        let (x, y) = (std::fs::read(a.join(f)).map_err(|e| e.to_string())?, std::fs::read(b.join(f)).map_err(|e| e.to_string())?);
        if x != y {
            return Err(format!("{} differs between runs", f.display()));
        }
    }
    Ok(format!("{} files byte-identical across two runs", fa.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("viability threshold goldens", n_min_goldens),
        ("Bernstein cross-threshold sweep", bernstein_sweep_criterion),
        ("residual bound property", residual_bound_property),
        ("partition gain identity", partition_identity),
        ("Pi1/Pi2 phase transition", phase_transition_sweep),
        ("prior-channel sweep", prior_channel_sweep),
        ("nested selection near-oracle", selection_oracle),
        ("strictness audit", strictness_audit),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {name} ({secs:.1}s): {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1}s): {d}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
