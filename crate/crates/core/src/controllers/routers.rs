//! Partition routers: one action per cell, chosen by within-cell loss argmin.

use super::cart::{cart_tree, Tree};
use super::kmeans::{kmeans, KMeans};
use super::{not_fitted, FeatureMatrix, Policy, PolicyClass, PolicyInput, Standardizer};
use crate::loss::{argmin, best_fixed_action};
use crate::{Error, LossMatrix, Result};

pub const MIN_CELL: usize = 3;

/// Per-cell loss-argmin actions; cells with fewer than `min_cell` rows get
/// the global best fixed action.
pub fn cell_actions(losses: &LossMatrix, cells: &[usize], k: usize, min_cell: usize) -> Vec<usize> {
    let global = best_fixed_action(losses).0;
    let m = losses.num_actions();
    let mut sums = vec![vec![0.0; m]; k];
    let mut counts = vec![0usize; k];
    for (i, &g) in cells.iter().enumerate() {
        counts[g] += 1;
        for (s, v) in sums[g].iter_mut().zip(losses.row(i)) {
            *s += v;
        }
    }
    (0..k)
        .map(|g| if counts[g] < min_cell.max(1) { global } else { argmin(&sums[g]) })
        .collect()
}

fn check_rows(x: &FeatureMatrix, losses: &LossMatrix) -> Result<()> {
    if x.n() != losses.n() {
        return Err(Error::Shape(format!("{} feature rows for {} loss rows", x.n(), losses.n())));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct KMeansRouter {
    name: String,
    k: usize,
    min_cell: usize,
    fitted: Option<(Standardizer, KMeans, Vec<usize>)>,
}

impl KMeansRouter {
    pub fn new(k: usize) -> Self {
        Self::with_min_cell(k, MIN_CELL)
    }

    pub fn with_min_cell(k: usize, min_cell: usize) -> Self {
        Self { name: format!("kmeans_k{k}"), k, min_cell, fitted: None }
    }

    /// Cell index of each row under the fitted clustering.
    pub fn cells(&self, x: &FeatureMatrix) -> Result<Vec<usize>> {
        let (s, km, _) = self.fitted.as_ref().ok_or_else(|| not_fitted(&self.name))?;
        Ok(km.predict(&s.transform(x)?))
    }

    pub fn cell_action_table(&self) -> Option<&[usize]> {
        self.fitted.as_ref().map(|f| f.2.as_slice())
    }
}

impl Policy for KMeansRouter {
    fn family_name(&self) -> &str {
        &self.name
    }

    fn class_tag(&self) -> PolicyClass {
        PolicyClass::Pi1
    }

    fn fit(&mut self, input: PolicyInput<'_>, losses: &LossMatrix, seed: u64) -> Result<()> {
        check_rows(input.features, losses)?;
        let s = Standardizer::fit(input.features)?;
        let km = kmeans(&s.transform(input.features)?, self.k, seed)?;
        let actions = cell_actions(losses, &km.assignment, self.k, self.min_cell);
        self.fitted = Some((s, km, actions));
        Ok(())
    }

    fn predict(&self, input: PolicyInput<'_>) -> Result<Vec<usize>> {
        let cells = self.cells(input.features)?;
        let table = &self.fitted.as_ref().expect("checked by cells").2;
        Ok(cells.into_iter().map(|g| table[g]).collect())
    }
}

/// A CART tree grown on per-row loss-argmin labels whose leaves are then
/// re-assigned their own loss-argmin action.
#[derive(Debug, Clone)]
pub struct CartRouter {
    name: String,
    max_depth: usize,
    min_samples_leaf: usize,
    min_cell: usize,
    fitted: Option<(Tree, Vec<usize>)>,
}

impl CartRouter {
    pub fn new(max_depth: usize) -> Self {
        Self { name: format!("cart_d{max_depth}"), max_depth, min_samples_leaf: 5, min_cell: MIN_CELL, fitted: None }
    }

    pub fn with_min_samples_leaf(mut self, m: usize) -> Self {
        self.min_samples_leaf = m;
        self
    }

    pub fn tree(&self) -> Option<&Tree> {
        self.fitted.as_ref().map(|f| &f.0)
    }
}

impl Policy for CartRouter {
    fn family_name(&self) -> &str {
        &self.name
    }

    fn class_tag(&self) -> PolicyClass {
        PolicyClass::Pi1
    }

    fn fit(&mut self, input: PolicyInput<'_>, losses: &LossMatrix, _seed: u64) -> Result<()> {
        check_rows(input.features, losses)?;
        let labels = losses.row_argmin();
        let tree = cart_tree(input.features, &labels, losses.num_actions(), self.max_depth, self.min_samples_leaf)?;
        let leaves = tree.leaves(input.features)?;
        let actions = cell_actions(losses, &leaves, tree.num_leaves(), self.min_cell);
        self.fitted = Some((tree, actions));
        Ok(())
    }

    fn predict(&self, input: PolicyInput<'_>) -> Result<Vec<usize>> {
        let (tree, table) = self.fitted.as_ref().ok_or_else(|| not_fitted(&self.name))?;
        Ok(tree.leaves(input.features)?.into_iter().map(|g| table[g]).collect())
    }
}
