//! Strict nested cross-validation over a family pool.
//!
//! For each (seed, outer fold): the family is chosen by inner CV on the
//! outer-train rows, every family is refit on outer-train, and each fitted
//! family is scored once on outer-test. The auto-pick loss reuses the
//! winner's outer-test score.

use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{complement, make_folds};
use crate::controllers::{FamilyEntry, FeatureMatrix, PolicyClass, PolicyInput, PoolConfig, PriorChannel};
use crate::diagnostics::selection_bound;
use crate::{rng, Error, LossMatrix, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub outer_folds: usize,
    pub inner_folds: usize,
    pub seeds: Vec<u64>,
    pub pool: PoolConfig,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self { outer_folds: 5, inner_folds: 5, seeds: vec![0, 1, 2, 3, 4], pool: PoolConfig::canonical() }
    }
}

impl CvConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.outer_folds < 2 || self.inner_folds < 2 {
            return Err(Error::invalid("outer and inner fold counts must be at least 2"));
        }
        if n < 2 * self.outer_folds {
            return Err(Error::invalid(format!("need n >= 2 x outer folds, got n = {n}")));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("at least one seed is required"));
        }
        self.pool.validate()
    }
}

/// Features, losses and the optional prior channel of one dataset.
#[derive(Debug, Clone, Copy)]
pub struct CvData<'a> {
    pub features: &'a FeatureMatrix,
    pub losses: &'a LossMatrix,
    pub prior: Option<&'a PriorChannel>,
}

impl<'a> CvData<'a> {
    pub fn new(features: &'a FeatureMatrix, losses: &'a LossMatrix) -> Self {
        Self { features, losses, prior: None }
    }

    pub fn n(&self) -> usize {
        self.losses.n()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    /// Inner-CV family selection on outer-train.
    Select,
    /// Refitting families on outer-train.
    Refit,
    /// Scoring fitted families on outer-test.
    Evaluate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Access {
    pub phase: Phase,
    pub seed: u64,
    pub fold: usize,
    pub rows: Vec<usize>,
}

/// Owned row subset handed to controllers.
struct View {
    features: FeatureMatrix,
    losses: LossMatrix,
    prior: Option<PriorChannel>,
}

impl View {
    fn input(&self) -> PolicyInput<'_> {
        PolicyInput { features: &self.features, prior: self.prior.as_ref() }
    }

    fn subset(&self, idx: &[usize]) -> View {
        View {
            features: self.features.subset(idx),
            losses: self.losses.subset(idx),
            prior: self.prior.as_ref().map(|p| p.subset(idx)),
        }
    }
}

/// The only path from the dataset to controllers; every read is logged
/// when auditing is on.
struct Accessor<'a> {
    data: CvData<'a>,
    log: Option<Mutex<Vec<Access>>>,
}

impl Accessor<'_> {
    fn view(&self, phase: Phase, seed: u64, fold: usize, rows: &[usize]) -> View {
        if let Some(log) = &self.log {
            log.lock().expect("audit log poisoned").push(Access { phase, seed, fold, rows: rows.to_vec() });
        }
        View {
            features: self.data.features.subset(rows),
            losses: self.data.losses.subset(rows),
            prior: self.data.prior.map(|p| p.subset(rows)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyResult {
    pub name: String,
    pub class: PolicyClass,
    /// Mean over seeds of the pooled outer-test loss.
    pub mean: Option<f64>,
    /// Population standard deviation over seeds.
    pub sd: Option<f64>,
    pub per_seed: Vec<Option<f64>>,
    /// Outer cells in which the family failed to fit or predict.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoPick {
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub per_seed: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellPick {
    pub seed: u64,
    pub fold: usize,
    /// `None` when every family failed inner selection.
    pub family: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub n: usize,
    pub outer_folds: usize,
    pub inner_folds: usize,
    pub seeds: Vec<u64>,
    pub families: Vec<FamilyResult>,
    pub auto_pick: AutoPick,
    /// Per family, in pool order: outer cells where inner CV picked it.
    pub pick_counts: Vec<(String, usize)>,
    pub picks: Vec<CellPick>,
    pub n_in: usize,
    pub selection_bound: f64,
    #[serde(default)]
    pub predicted_class: Option<PolicyClass>,
}

struct CellResult {
    /// Per family: summed outer-test loss, or `None` on failure.
    family_sums: Vec<Option<f64>>,
    pick: Option<usize>,
    test_len: usize,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn summarize(per_seed: &[Option<f64>]) -> (Option<f64>, Option<f64>) {
    let ok: Vec<f64> = per_seed.iter().flatten().copied().collect();
    if ok.is_empty() {
        return (None, None);
    }
    let (m, s) = mean_sd(&ok);
    (Some(m), Some(s))
}

/// Fits `family` on `train` and returns the summed loss on `eval`.
fn fit_score(family: &FamilyEntry, train: &View, eval: &View, seed: u64) -> Result<f64> {
    let mut p = family.build()?;
    p.fit(train.input(), &train.losses, seed)?;
    let pred = p.predict(eval.input())?;
    Ok(pred.iter().enumerate().map(|(i, &a)| eval.losses.get(i, a)).sum())
}

/// Inner-CV family choice on one training view; `None` if every family fails.
fn inner_choice(pool: &[FamilyEntry], train: &View, inner_folds: usize, seed: u64) -> Result<Option<usize>> {
    let folds = make_folds(train.losses.n(), inner_folds, seed)?;
    let mut best: Option<(usize, f64)> = None;
    for (fi, family) in pool.iter().enumerate() {
        let mut total = 0.0;
        for (k, val) in folds.iter().enumerate() {
            let tr = train.subset(&complement(&folds, k));
            let va = train.subset(val);
            match fit_score(family, &tr, &va, rng::derive(seed, &[fi as u64, k as u64])) {
                Ok(s) => total += s,
                Err(e) => {
                    log::warn!("inner fit of {} failed: {e}", family.display_name().unwrap_or_default());
                    total = f64::INFINITY;
                    break;
                }
            }
        }
        let score = total / train.losses.n() as f64;
        if score.is_finite() && best.is_none_or(|b| score < b.1) {
            best = Some((fi, score));
        }
    }
    Ok(best.map(|b| b.0))
}

/// Inner-CV selection on the full dataset: the family with the lowest
/// held-out loss, pool order breaking ties.
pub fn inner_select(pool: &PoolConfig, data: CvData<'_>, inner_folds: usize, seed: u64) -> Result<String> {
    pool.validate()?;
    let all: Vec<usize> = (0..data.n()).collect();
    let acc = Accessor { data, log: None };
    let view = acc.view(Phase::Select, seed, 0, &all);
    match inner_choice(&pool.families, &view, inner_folds, seed)? {
        Some(i) => pool.families[i].display_name(),
        None => Err(Error::Fit("every family failed inner selection".into())),
    }
}

fn run_cell(acc: &Accessor<'_>, cfg: &CvConfig, folds: &[Vec<usize>], seed: u64, fold: usize) -> Result<CellResult> {
    let pool = &cfg.pool.families;
    let train_idx = complement(folds, fold);
    let test_idx = &folds[fold];

    let select_view = acc.view(Phase::Select, seed, fold, &train_idx);
    let pick = inner_choice(pool, &select_view, cfg.inner_folds, rng::derive(seed, &[1, fold as u64]))?;
    drop(select_view);

    let train = acc.view(Phase::Refit, seed, fold, &train_idx);
    let mut fitted = Vec::with_capacity(pool.len());
    for (fi, family) in pool.iter().enumerate() {
        let fit = family.build().and_then(|mut p| {
            p.fit(train.input(), &train.losses, rng::derive(seed, &[2, fold as u64, fi as u64]))?;
            Ok(p)
        });
        if let Err(e) = &fit {
            log::warn!("outer refit of {} failed: {e}", family.display_name().unwrap_or_default());
        }
        fitted.push(fit.ok());
    }

    let mut family_sums = Vec::with_capacity(pool.len());
    for p in &fitted {
        let test = acc.view(Phase::Evaluate, seed, fold, test_idx);
        let sum = p.as_ref().and_then(|p| match p.predict(test.input()) {
            Ok(pred) => Some(pred.iter().enumerate().map(|(i, &a)| test.losses.get(i, a)).sum()),
            Err(e) => {
                log::warn!("prediction failed: {e}");
                None
            }
        });
        family_sums.push(sum);
    }
    Ok(CellResult { family_sums, pick, test_len: test_idx.len() })
}

fn run(cfg: &CvConfig, data: CvData<'_>, audit: bool) -> Result<(CvReport, Vec<Access>)> {
    let n = data.n();
    if data.features.n() != n {
        return Err(Error::Shape(format!("{} feature rows for {} loss rows", data.features.n(), n)));
    }
    if let Some(p) = data.prior {
        if p.len() != n {
            return Err(Error::Shape(format!("{} prior values for {n} rows", p.len())));
        }
    }
    cfg.validate(n)?;
    let names = cfg.pool.names()?;
    let acc = Accessor { data, log: audit.then(|| Mutex::new(Vec::new())) };
    let outer: Vec<Vec<Vec<usize>>> = cfg
        .seeds
        .iter()
        .map(|&s| make_folds(n, cfg.outer_folds, rng::derive(s, &[0])))
        .collect::<Result<_>>()?;
    let cells: Vec<(usize, usize)> = (0..cfg.seeds.len()).flat_map(|s| (0..cfg.outer_folds).map(move |f| (s, f))).collect();
    let results: Vec<CellResult> = cells
        .par_iter()
        .map(|&(si, f)| run_cell(&acc, cfg, &outer[si], cfg.seeds[si], f))
        .collect::<Result<_>>()?;

    let nf = cfg.pool.families.len();
    let mut per_seed = vec![vec![Some(0.0); cfg.seeds.len()]; nf];
    let mut failures = vec![0usize; nf];
    let mut auto: Vec<Option<f64>> = vec![Some(0.0); cfg.seeds.len()];
    let mut pick_counts = vec![0usize; nf];
    let mut picks = Vec::with_capacity(cells.len());
    for (&(si, f), r) in cells.iter().zip(&results) {
        debug_assert!(r.test_len > 0);
        for (fi, s) in r.family_sums.iter().enumerate() {
            match s {
                Some(v) => {
                    if let Some(acc) = per_seed[fi][si].as_mut() {
                        *acc += v;
                    }
                }
                None => {
                    failures[fi] += 1;
                    per_seed[fi][si] = None;
                }
            }
        }
        let picked_sum = r.pick.and_then(|p| r.family_sums[p]);
        match picked_sum {
            Some(v) => {
                if let Some(acc) = auto[si].as_mut() {
                    *acc += v;
                }
            }
            None => auto[si] = None,
        }
        if let Some(p) = r.pick {
            pick_counts[p] += 1;
        }
        picks.push(CellPick { seed: cfg.seeds[si], fold: f, family: r.pick.map(|p| names[p].clone()) });
    }
    let scale = |v: Option<f64>| v.map(|s| s / n as f64);
    let families = (0..nf)
        .map(|fi| {
            let ps: Vec<Option<f64>> = per_seed[fi].iter().map(|&v| scale(v)).collect();
            let (mean, sd) = summarize(&ps);
            FamilyResult { name: names[fi].clone(), class: cfg.pool.families[fi].class(), mean, sd, per_seed: ps, failures: failures[fi] }
        })
        .collect::<Vec<FamilyResult>>();
    if families.iter().all(|f| f.mean.is_none()) {
        return Err(Error::Fit("every family failed in every seed".into()));
    }
    let auto_ps: Vec<Option<f64>> = auto.into_iter().map(scale).collect();
    let (amean, asd) = summarize(&auto_ps);
    let n_out = n - n.div_ceil(cfg.outer_folds);
    let n_in = n_out / cfg.inner_folds;
    let report = CvReport {
        n,
        outer_folds: cfg.outer_folds,
        inner_folds: cfg.inner_folds,
        seeds: cfg.seeds.clone(),
        families,
        auto_pick: AutoPick { mean: amean, sd: asd, per_seed: auto_ps },
        pick_counts: names.into_iter().zip(pick_counts).collect(),
        picks,
        n_in,
        selection_bound: selection_bound(nf, n_in, data.losses.l_max()),
        predicted_class: None,
    };
    let log = acc.log.map(|m| m.into_inner().expect("audit log poisoned")).unwrap_or_default();
    Ok((report, log))
}

pub fn strict_nested_cv(cfg: &CvConfig, data: CvData<'_>) -> Result<CvReport> {
    Ok(run(cfg, data, false)?.0)
}

/// Same as [`strict_nested_cv`], also returning every dataset read.
pub fn strict_nested_cv_audited(cfg: &CvConfig, data: CvData<'_>) -> Result<(CvReport, Vec<Access>)> {
    run(cfg, data, true)
}

/// Outer folds used for `seed`, matching [`strict_nested_cv`].
pub fn outer_folds_for(n: usize, outer_folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    make_folds(n, outer_folds, rng::derive(seed, &[0]))
}
