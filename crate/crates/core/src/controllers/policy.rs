use std::fmt;

use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, PriorChannel};
use crate::{LossMatrix, Result};

/// The four nested controller classes, ordered from coarsest to finest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PolicyClass {
    Pi0,
    Pi1,
    Pi2,
    Pi3,
}

impl PolicyClass {
    pub const ALL: [PolicyClass; 4] = [Self::Pi0, Self::Pi1, Self::Pi2, Self::Pi3];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pi0 => "Pi0",
            Self::Pi1 => "Pi1",
            Self::Pi2 => "Pi2",
            Self::Pi3 => "Pi3",
        }
    }
}

impl fmt::Display for PolicyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a controller may look at. The prior channel travels separately so
/// that only prior-gated controllers can read it.
#[derive(Debug, Clone, Copy)]
pub struct PolicyInput<'a> {
    pub features: &'a FeatureMatrix,
    pub prior: Option<&'a PriorChannel>,
}

impl<'a> PolicyInput<'a> {
    pub fn new(features: &'a FeatureMatrix) -> Self {
        Self { features, prior: None }
    }

    pub fn with_prior(features: &'a FeatureMatrix, prior: &'a PriorChannel) -> Self {
        Self { features, prior: Some(prior) }
    }

    pub fn n(&self) -> usize {
        self.features.n()
    }
}

/// A controller: fit on features and a loss matrix, then map rows to action
/// indices. `predict` must be deterministic once fitted.
pub trait Policy: Send + Sync {
    fn family_name(&self) -> &str;

    fn class_tag(&self) -> PolicyClass;

    fn fit(&mut self, input: PolicyInput<'_>, losses: &LossMatrix, seed: u64) -> Result<()>;

    fn predict(&self, input: PolicyInput<'_>) -> Result<Vec<usize>>;
}

pub(crate) fn not_fitted(name: &str) -> crate::Error {
    crate::Error::Fit(format!("{name} used before fit"))
}
