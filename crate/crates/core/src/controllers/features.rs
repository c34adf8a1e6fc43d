use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Row-major `n x d` feature block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    n: usize,
    d: usize,
    names: Option<Vec<String>>,
}

impl FeatureMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * d);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != d {
                return Err(Error::Shape(format!("feature row {i} has {} columns, expected {d}", row.len())));
            }
            data.extend(row);
        }
        Self::from_flat(data, n, d)
    }

    pub fn from_flat(data: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if data.len() != n * d {
            return Err(Error::Shape(format!("{} values cannot fill {n} x {d}", data.len())));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite feature at row {}, column {}", pos / d.max(1), pos % d.max(1))));
        }
        Ok(Self { data, n, d, names: None })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.d {
            return Err(Error::Shape(format!("{} names for {} columns", names.len(), self.d)));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact(0) panics, so zero-width blocks go through a range.
        (0..self.n).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.data[i * self.d + j]).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self { data, n: indices.len(), d: self.d, names: self.names.clone() }
    }

    /// Appends columns from another block with the same row count.
    pub fn hstack(&self, other: &FeatureMatrix) -> Result<Self> {
        if other.n != self.n {
            return Err(Error::Shape(format!("cannot stack {} rows onto {}", other.n, self.n)));
        }
        let d = self.d + other.d;
        let mut data = Vec::with_capacity(self.n * d);
        for i in 0..self.n {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Ok(Self { data, n: self.n, d, names: None })
    }
}

/// Smallest standard deviation used when scaling; constant columns map to 0.
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &FeatureMatrix) -> Result<Self> {
        if x.n() == 0 {
            return Err(Error::Empty("cannot standardize zero rows"));
        }
        let n = x.n() as f64;
        let mut mean = vec![0.0; x.d()];
        for row in x.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; x.d()];
        for row in x.rows() {
            for j in 0..x.d() {
                let e = row[j] - mean[j];
                var[j] += e * e;
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt().max(STD_FLOOR)).collect();
        Ok(Self { mean, std })
    }

    pub fn transform(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.d() != self.mean.len() {
            return Err(Error::Shape(format!("standardizer fit on {} columns, got {}", self.mean.len(), x.d())));
        }
        let mut data = Vec::with_capacity(x.n() * x.d());
        for row in x.rows() {
            for j in 0..x.d() {
                data.push((row[j] - self.mean[j]) / self.std[j]);
            }
        }
        Ok(FeatureMatrix { data, n: x.n(), d: x.d(), names: x.names.clone() })
    }
}
