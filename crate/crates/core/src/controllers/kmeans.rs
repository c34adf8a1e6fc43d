//! Lloyd's k-means with seeded farthest-point initialization.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::{rng, Error, Result};

pub const MAX_ITER: usize = 100;
pub const SHIFT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeans {
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    /// Within-cluster sum of squares after each assignment step.
    pub sse_history: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid, lowest index on ties.
pub fn nearest(centroids: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centre) in centroids.iter().enumerate() {
        let d = sq_dist(centre, x);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn farthest_point_init(x: &FeatureMatrix, k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng::rng(seed);
    let first = r.random_range(0..x.n());
    let mut centroids = vec![x.row(first).to_vec()];
    let mut min_d: Vec<f64> = x.rows().map(|row| sq_dist(row, &centroids[0])).collect();
    while centroids.len() < k {
        let mut pick = 0;
        for i in 1..x.n() {
            if min_d[i] > min_d[pick] {
                pick = i;
            }
        }
        let c = x.row(pick).to_vec();
        for (i, row) in x.rows().enumerate() {
            min_d[i] = min_d[i].min(sq_dist(row, &c));
        }
        centroids.push(c);
    }
    centroids
}

pub fn kmeans(x: &FeatureMatrix, k: usize, seed: u64) -> Result<KMeans> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if x.n() < k {
        return Err(Error::invalid(format!("k-means needs n >= k, got n = {} and k = {k}", x.n())));
    }
    let mut centroids = farthest_point_init(x, k, seed);
    let mut assignment = vec![0; x.n()];
    let mut sse_history = Vec::new();
    let mut iterations = 0;
    loop {
        let mut sse = 0.0;
        for (i, row) in x.rows().enumerate() {
            let (c, d) = nearest(&centroids, row);
            assignment[i] = c;
            sse += d;
        }
        sse_history.push(sse);
        if iterations == MAX_ITER {
            break;
        }
        iterations += 1;
        let mut sums = vec![vec![0.0; x.d()]; k];
        let mut counts = vec![0usize; k];
        for (row, &c) in x.rows().zip(&assignment) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(row) {
                *s += v;
            }
        }
        let mut shift = 0.0_f64;
        for c in 0..k {
            // An empty cluster keeps its previous centroid.
            if counts[c] == 0 {
                continue;
            }
            let new: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            shift = shift.max(sq_dist(&new, &centroids[c]).sqrt());
            centroids[c] = new;
        }
        if shift < SHIFT_TOL {
            for (i, row) in x.rows().enumerate() {
                assignment[i] = nearest(&centroids, row).0;
            }
            sse_history.push(x.rows().zip(&assignment).map(|(row, &c)| sq_dist(row, &centroids[c])).sum());
            break;
        }
    }
    Ok(KMeans { centroids, assignment, sse_history, iterations })
}

impl KMeans {
    pub fn predict(&self, x: &FeatureMatrix) -> Vec<usize> {
        x.rows().map(|row| nearest(&self.centroids, row).0).collect()
    }
}
