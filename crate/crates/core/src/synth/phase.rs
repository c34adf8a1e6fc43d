//! Winner maps over (n, knob) grids: partition router against the
//! instance-level plug-in, and the plug-in against the prior-gated
//! controller.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cluster_dgp::{sample_cluster_dgp, ClusterDgpSpec, ClusterSample};
use crate::controllers::{KMeansRouter, Policy, PolicyClass, PolicyInput, PriorGatedPolicy, SelectivePlugin, ThresholdGate};
use crate::cv::{complement, make_folds, TIE_EPS};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Pi12,
    Pi3,
}

impl SweepKind {
    pub fn classes(self) -> [PolicyClass; 2] {
        match self {
            Self::Pi12 => [PolicyClass::Pi1, PolicyClass::Pi2],
            Self::Pi3 => [PolicyClass::Pi2, PolicyClass::Pi3],
        }
    }

    pub fn knob_name(self) -> &'static str {
        match self {
            Self::Pi12 => "bk",
            Self::Pi3 => "z_strength",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSweepSpec {
    pub kind: SweepKind,
    pub n_grid: Vec<usize>,
    pub knob_grid: Vec<f64>,
    pub seeds: usize,
    pub folds: usize,
    pub seed: u64,
}

impl PhaseSweepSpec {
    pub fn pi12() -> Self {
        Self {
            kind: SweepKind::Pi12,
            n_grid: vec![150, 300, 600, 1200, 2400, 4800],
            knob_grid: vec![0.0, 0.5, 1.0, 1.6, 2.4, 3.5],
            seeds: 3,
            folds: 5,
            seed: 0,
        }
    }

    pub fn pi3() -> Self {
        Self {
            kind: SweepKind::Pi3,
            n_grid: vec![300, 600, 1200, 2400, 4800],
            knob_grid: vec![0.0, 0.5, 1.0, 1.5, 2.5, 4.0],
            seeds: 3,
            folds: 5,
            seed: 0,
        }
    }

    fn dgp(&self, n: usize, knob: f64, seed: u64) -> ClusterDgpSpec {
        match self.kind {
            SweepKind::Pi12 => ClusterDgpSpec::partition(n, knob, seed),
            SweepKind::Pi3 => ClusterDgpSpec::prior(n, knob, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub n: usize,
    pub knob: f64,
    /// Seed-averaged CV loss of the coarser and the finer class.
    pub losses: [f64; 2],
    pub winner: PolicyClass,
    /// Loser loss minus winner loss.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSweep {
    pub spec: PhaseSweepSpec,
    /// Row-major over `knob_grid` then `n_grid`.
    pub cells: Vec<PhaseCell>,
}

impl PhaseSweep {
    pub fn cell(&self, n: usize, knob: f64) -> Option<&PhaseCell> {
        self.cells.iter().find(|c| c.n == n && c.knob == knob)
    }

    pub fn wins(&self, class: PolicyClass, pred: impl Fn(&PhaseCell) -> bool) -> (usize, usize) {
        let sel: Vec<&PhaseCell> = self.cells.iter().filter(|c| pred(c)).collect();
        (sel.iter().filter(|c| c.winner == class).count(), sel.len())
    }
}

/// The instance-level learner used in both sweeps.
pub fn instance_policy() -> SelectivePlugin {
    SelectivePlugin::new(0.3)
}

/// The gated controller of the prior sweep: direct above `tau`, defer below
/// `-tau`, the instance-level learner in between.
pub fn gated_policy(tau: f64) -> PriorGatedPolicy {
    PriorGatedPolicy::new(ThresholdGate::new(tau, "direct", "defer"), Box::new(instance_policy())).expect("lower-class fallback")
}

fn build(class: PolicyClass, tau: f64) -> Box<dyn Policy> {
    match class {
        PolicyClass::Pi1 => Box::new(KMeansRouter::new(4)),
        PolicyClass::Pi2 => Box::new(instance_policy()),
        PolicyClass::Pi3 => Box::new(gated_policy(tau)),
        PolicyClass::Pi0 => unreachable!("no fixed class in the sweeps"),
    }
}

/// Pooled k-fold CV loss of a freshly built controller.
pub fn cv_loss(make: impl Fn() -> Box<dyn Policy>, sample: &ClusterSample, folds: usize, seed: u64) -> Result<f64> {
    let n = sample.losses.n();
    let split = make_folds(n, folds, rng::derive(seed, &[0]))?;
    let mut total = 0.0;
    for (k, test) in split.iter().enumerate() {
        let train = complement(&split, k);
        let (xtr, xte) = (sample.features.subset(&train), sample.features.subset(test));
        let (ztr, zte) = (sample.prior.subset(&train), sample.prior.subset(test));
        let mut p = make();
        p.fit(PolicyInput::with_prior(&xtr, &ztr), &sample.losses.subset(&train), rng::derive(seed, &[1, k as u64]))?;
        let pred = p.predict(PolicyInput::with_prior(&xte, &zte))?;
        total += test.iter().zip(pred).map(|(&i, a)| sample.losses.get(i, a)).sum::<f64>();
    }
    Ok(total / n as f64)
}

/// Coarser class wins unless the finer one is better by more than `TIE_EPS`.
pub fn declare_winner(classes: [PolicyClass; 2], losses: [f64; 2]) -> (PolicyClass, f64) {
    if losses[1] < losses[0] - TIE_EPS {
        (classes[1], losses[0] - losses[1])
    } else {
        (classes[0], losses[1] - losses[0])
    }
}

pub fn phase_sweep(spec: &PhaseSweepSpec) -> Result<PhaseSweep> {
    if spec.n_grid.is_empty() || spec.knob_grid.is_empty() || spec.seeds == 0 {
        return Err(Error::invalid("sweep grids and seed count must be non-empty"));
    }
    let classes = spec.kind.classes();
    let jobs: Vec<(usize, usize, usize)> = (0..spec.knob_grid.len())
        .flat_map(|ki| (0..spec.n_grid.len()).flat_map(move |ni| (0..spec.seeds).map(move |s| (ki, ni, s))))
        .collect();
    let per_job: Vec<[f64; 2]> = jobs
        .par_iter()
        .map(|&(ki, ni, s)| {
            let (n, knob) = (spec.n_grid[ni], spec.knob_grid[ki]);
            let seed = rng::derive(spec.seed, &[ki as u64, ni as u64, s as u64]);
            let dgp = spec.dgp(n, knob, seed);
            let sample = sample_cluster_dgp(&dgp)?;
            let cv_seed = rng::derive(seed, &[99]);
            let a = cv_loss(|| build(classes[0], dgp.tau), &sample, spec.folds, cv_seed)?;
            let b = cv_loss(|| build(classes[1], dgp.tau), &sample, spec.folds, cv_seed)?;
            Ok([a, b])
        })
        .collect::<Result<_>>()?;
    let mut cells = Vec::new();
    for (ki, &knob) in spec.knob_grid.iter().enumerate() {
        for (ni, &n) in spec.n_grid.iter().enumerate() {
            let mut losses = [0.0; 2];
            for (job, l) in jobs.iter().zip(&per_job) {
                if job.0 == ki && job.1 == ni {
                    losses[0] += l[0] / spec.seeds as f64;
                    losses[1] += l[1] / spec.seeds as f64;
                }
            }
            let (winner, margin) = declare_winner(classes, losses);
            cells.push(PhaseCell { n, knob, losses, winner, margin });
        }
    }
    Ok(PhaseSweep { spec: spec.clone(), cells })
}

pub fn pi12_phase_sweep(spec: &PhaseSweepSpec) -> Result<PhaseSweep> {
    if spec.kind != SweepKind::Pi12 {
        return Err(Error::invalid("expected a Pi1/Pi2 sweep spec"));
    }
    phase_sweep(spec)
}

pub fn pi3_sweep(spec: &PhaseSweepSpec) -> Result<PhaseSweep> {
    if spec.kind != SweepKind::Pi3 {
        return Err(Error::invalid("expected a Pi2/Pi3 sweep spec"));
    }
    phase_sweep(spec)
}
