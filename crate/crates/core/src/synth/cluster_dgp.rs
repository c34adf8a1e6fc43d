//! Four-cluster data-generating process with a smooth correctness signal,
//! per-cluster logit offsets and an optional hidden prior channel.
//!
//! Cluster centers sit on the corners of a square of half-side
//! `separation`, embedded in the first `dim - 1` coordinates through a
//! seeded orthonormal frame. The last coordinate carries the smooth signal
//! `s(X)`. Clusters 1 and 3 sit on one diagonal, so a linear score on X
//! cannot express the per-cluster offsets while a partition can.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::controllers::{FeatureMatrix, PriorChannel};
use crate::{rng, ActionSet, Error, LossMatrix, Result};

pub const PARTITION_BUMP: [f64; 4] = [1.2, -0.2, 1.2, -0.2];
pub const PARTITION_FALLBACK_LOSS: f64 = 0.375;
pub const PRIOR_BUMP: [f64; 4] = [0.3, 0.3, 0.3, -0.3];
pub const PRIOR_FALLBACK_LOSS: f64 = 0.315;
pub const PRIOR_WRONG_LOSS: f64 = 0.7;
pub const PRIOR_BK: f64 = 1.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDgpSpec {
    pub cluster_masses: Vec<f64>,
    pub dim: usize,
    pub bk: f64,
    pub bump: Vec<f64>,
    pub n: usize,
    pub seed: u64,
    pub z_strength: f64,
    pub tau: f64,
    /// Half the side of the square of cluster centers.
    pub separation: f64,
    /// Seed of the center frame; fixed so every sample shares one geometry.
    pub geometry_seed: u64,
    /// Loss of `direct` when wrong (zero when right).
    pub wrong_loss: f64,
    /// Constant loss of the fallback action.
    pub fallback_loss: f64,
}

impl ClusterDgpSpec {
    /// The partition-versus-instance setting: no prior channel.
    pub fn partition(n: usize, bk: f64, seed: u64) -> Self {
        Self {
            cluster_masses: vec![0.35, 0.25, 0.20, 0.20],
            dim: 6,
            bk,
            bump: PARTITION_BUMP.to_vec(),
            n,
            seed,
            z_strength: 0.0,
            tau: 1.0,
            separation: 3.0,
            geometry_seed: 7,
            wrong_loss: 1.0,
            fallback_loss: PARTITION_FALLBACK_LOSS,
        }
    }

    /// The prior-channel setting.
    pub fn prior(n: usize, z_strength: f64, seed: u64) -> Self {
        Self {
            bk: PRIOR_BK,
            bump: PRIOR_BUMP.to_vec(),
            z_strength,
            wrong_loss: PRIOR_WRONG_LOSS,
            fallback_loss: PRIOR_FALLBACK_LOSS,
            ..Self::partition(n, 0.0, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.cluster_masses.len();
        if k != 4 || self.bump.len() != 4 {
            return Err(Error::invalid("the cluster process has exactly four clusters and four offsets"));
        }
        if self.cluster_masses.iter().any(|&m| !(m >= 0.0)) || (self.cluster_masses.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("cluster masses must be non-negative and sum to 1"));
        }
        if self.dim < 3 {
            return Err(Error::invalid("dim must be at least 3: two center directions plus the signal coordinate"));
        }
        if !(self.wrong_loss > 0.0) || !(self.fallback_loss >= 0.0) {
            return Err(Error::invalid("losses must be non-negative with a positive wrong-answer loss"));
        }
        Ok(())
    }

    /// Cluster centers, one row per cluster.
    pub fn centers(&self) -> Vec<Vec<f64>> {
        let mut r = rng::rng(self.geometry_seed);
        let span = self.dim - 1;
        let mut draw = || -> Vec<f64> { (0..span).map(|_| StandardNormal.sample(&mut r)).collect() };
        let unit = |v: Vec<f64>| {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect::<Vec<f64>>()
        };
        let u = unit(draw());
        let raw = draw();
        let proj: f64 = raw.iter().zip(&u).map(|(a, b)| a * b).sum();
        let v = unit(raw.iter().zip(&u).map(|(a, b)| a - proj * b).collect());
        let a = self.separation;
        [(a, a), (-a, a), (-a, -a), (a, -a)]
            .iter()
            .map(|&(x, y)| {
                let mut c: Vec<f64> = u.iter().zip(&v).map(|(ui, vi)| x * ui + y * vi).collect();
                c.push(0.0);
                c
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ClusterSample {
    pub features: FeatureMatrix,
    pub losses: LossMatrix,
    pub prior: PriorChannel,
    pub cells: Vec<usize>,
    pub direct_correct: Vec<bool>,
}

pub fn synthetic_actions() -> ActionSet {
    ActionSet::new(["direct", "defer"]).expect("valid labels")
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn sample_cluster_dgp(spec: &ClusterDgpSpec) -> Result<ClusterSample> {
    spec.validate()?;
    let centers = spec.centers();
    let mut r = rng::rng(spec.seed);
    let d = spec.dim;
    let mut data = Vec::with_capacity(spec.n * d);
    let mut losses = Vec::with_capacity(spec.n);
    let mut z = Vec::with_capacity(spec.n);
    let mut cells = Vec::with_capacity(spec.n);
    let mut correct = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let u: f64 = r.random();
        let mut g = 0;
        let mut acc = spec.cluster_masses[0];
        while u >= acc && g + 1 < 4 {
            g += 1;
            acc += spec.cluster_masses[g];
        }
        let start = data.len();
        for &c in &centers[g] {
            let e: f64 = StandardNormal.sample(&mut r);
            data.push(c + e);
        }
        let s = data[start + d - 1];
        let zi: f64 = StandardNormal.sample(&mut r);
        let p = sigmoid(spec.bk * s + spec.z_strength * zi + spec.bump[g]);
        let ok = r.random::<f64>() < p;
        losses.push(vec![if ok { 0.0 } else { spec.wrong_loss }, spec.fallback_loss]);
        z.push(zi);
        cells.push(g);
        correct.push(ok);
    }
    let l_max = spec.wrong_loss.max(spec.fallback_loss);
    Ok(ClusterSample {
        features: FeatureMatrix::from_flat(data, spec.n, d)?,
        losses: LossMatrix::with_bound(losses, synthetic_actions(), l_max)?,
        prior: PriorChannel::new(z)?,
        cells,
        direct_correct: correct,
    })
}
