//! Prior-gated controllers: a side channel invisible to the feature block
//! decides confident inputs, and a lower-class fallback handles the rest.

use serde::{Deserialize, Serialize};

use super::fixed::ActionRef;
use super::{FeatureMatrix, Policy, PolicyClass, PolicyInput};
use crate::{ActionSet, Error, LossMatrix, Result};

/// Per-row prior scores, kept apart from the feature block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorChannel {
    z: Vec<f64>,
}

impl PriorChannel {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if let Some(i) = z.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite prior value at row {i}")));
        }
        Ok(Self { z })
    }

    pub fn values(&self) -> &[f64] {
        &self.z
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self { z: indices.iter().map(|&i| self.z[i]).collect() }
    }
}

/// A deterministic rule on one prior value. It never sees features.
pub trait PriorGate: Send + Sync {
    /// Resolves action labels once the action set is known.
    fn bind(&mut self, _actions: &ActionSet) -> Result<()> {
        Ok(())
    }

    fn decide(&self, z: f64) -> Option<usize>;
}

/// `z > tau` plays `high`, `z < -tau` plays `low`, otherwise abstains from gating.
#[derive(Debug, Clone)]
pub struct ThresholdGate {
    pub tau: f64,
    high: ActionRef,
    low: ActionRef,
    bound: Option<(usize, usize)>,
}

impl ThresholdGate {
    pub fn new(tau: f64, high: impl Into<ActionRef>, low: impl Into<ActionRef>) -> Self {
        let (high, low) = (high.into(), low.into());
        let bound = match (&high, &low) {
            (ActionRef::Index(h), ActionRef::Index(l)) => Some((*h, *l)),
            _ => None,
        };
        Self { tau, high, low, bound }
    }
}

impl PriorGate for ThresholdGate {
    fn bind(&mut self, actions: &ActionSet) -> Result<()> {
        self.bound = Some((self.high.resolve(actions)?, self.low.resolve(actions)?));
        Ok(())
    }

    fn decide(&self, z: f64) -> Option<usize> {
        let (high, low) = self.bound?;
        if z > self.tau {
            Some(high)
        } else if z < -self.tau {
            Some(low)
        } else {
            None
        }
    }
}

pub struct PriorGatedPolicy {
    name: String,
    gate: Box<dyn PriorGate>,
    fallback: Box<dyn Policy>,
    fitted: bool,
}

impl PriorGatedPolicy {
    pub fn new(gate: impl PriorGate + 'static, fallback: Box<dyn Policy>) -> Result<Self> {
        if fallback.class_tag() == PolicyClass::Pi3 {
            return Err(Error::invalid("the fallback of a prior-gated policy must come from a lower class"));
        }
        let name = format!("prior_gated[{}]", fallback.family_name());
        Ok(Self { name, gate: Box::new(gate), fallback, fitted: false })
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    fn prior<'a>(&self, input: &PolicyInput<'a>) -> Result<&'a PriorChannel> {
        let z = input
            .prior
            .ok_or_else(|| Error::invalid(format!("{} needs a prior channel", self.name)))?;
        if z.len() != input.n() {
            return Err(Error::Shape(format!("{} prior values for {} rows", z.len(), input.n())));
        }
        Ok(z)
    }

    /// Gate decision per row, `None` where the fallback decides.
    pub fn gate_actions(&self, prior: &PriorChannel) -> Vec<Option<usize>> {
        prior.values().iter().map(|&z| self.gate.decide(z)).collect()
    }
}

impl Policy for PriorGatedPolicy {
    fn family_name(&self) -> &str {
        &self.name
    }

    fn class_tag(&self) -> PolicyClass {
        PolicyClass::Pi3
    }

    fn fit(&mut self, input: PolicyInput<'_>, losses: &LossMatrix, seed: u64) -> Result<()> {
        let z = self.prior(&input)?;
        self.gate.bind(losses.actions())?;
        let open: Vec<usize> = self
            .gate_actions(z)
            .iter()
            .enumerate()
            .filter_map(|(i, a)| a.is_none().then_some(i))
            .collect();
        if open.is_empty() {
            return Err(Error::Fit("the gate fires on every training row; the fallback has nothing to fit".into()));
        }
        let x: FeatureMatrix = input.features.subset(&open);
        self.fallback.fit(PolicyInput::new(&x), &losses.subset(&open), seed)?;
        self.fitted = true;
        Ok(())
    }

    fn predict(&self, input: PolicyInput<'_>) -> Result<Vec<usize>> {
        if !self.fitted {
            return Err(super::not_fitted(&self.name));
        }
        let z = self.prior(&input)?;
        let fallback = self.fallback.predict(PolicyInput::new(input.features))?;
        Ok(self
            .gate_actions(z)
            .into_iter()
            .zip(fallback)
            .map(|(g, f)| g.unwrap_or(f))
            .collect())
    }
}
