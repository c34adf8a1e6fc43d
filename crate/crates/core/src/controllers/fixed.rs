use serde::{Deserialize, Serialize};

use super::{not_fitted, Policy, PolicyClass, PolicyInput};
use crate::loss::best_fixed_action;
use crate::{ActionSet, Error, LossMatrix, Result};

/// An action named either by position or by label; labels are resolved
/// against the loss matrix at fit time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ActionRef {
    Index(usize),
    Label(String),
}

impl ActionRef {
    pub fn resolve(&self, actions: &ActionSet) -> Result<usize> {
        match self {
            Self::Index(i) if *i < actions.len() => Ok(*i),
            Self::Index(i) => Err(Error::invalid(format!("action index {i} out of range for {} actions", actions.len()))),
            Self::Label(l) => actions.index_of(l).ok_or_else(|| Error::invalid(format!("unknown action `{l}`"))),
        }
    }
}

impl From<usize> for ActionRef {
    fn from(i: usize) -> Self {
        Self::Index(i)
    }
}

impl From<&str> for ActionRef {
    fn from(l: &str) -> Self {
        Self::Label(l.to_owned())
    }
}

/// Plays one action everywhere.
#[derive(Debug, Clone)]
pub struct FixedPolicy {
    name: String,
    action: ActionRef,
    resolved: Option<usize>,
}

impl FixedPolicy {
    pub fn new(action: impl Into<ActionRef>) -> Self {
        let action = action.into();
        let name = match &action {
            ActionRef::Index(i) => format!("always_{i}"),
            ActionRef::Label(l) => format!("always_{l}"),
        };
        let resolved = match action {
            ActionRef::Index(i) => Some(i),
            ActionRef::Label(_) => None,
        };
        Self { name, action, resolved }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

impl Policy for FixedPolicy {
    fn family_name(&self) -> &str {
        &self.name
    }

    fn class_tag(&self) -> PolicyClass {
        PolicyClass::Pi0
    }

    fn fit(&mut self, _input: PolicyInput<'_>, losses: &LossMatrix, _seed: u64) -> Result<()> {
        self.resolved = Some(self.action.resolve(losses.actions())?);
        Ok(())
    }

    fn predict(&self, input: PolicyInput<'_>) -> Result<Vec<usize>> {
        let a = self.resolved.ok_or_else(|| not_fitted(&self.name))?;
        Ok(vec![a; input.n()])
    }
}

/// Plays the best fixed action of its training fold.
#[derive(Debug, Clone, Default)]
pub struct FairFixedPolicy {
    action: Option<usize>,
}

impl FairFixedPolicy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn action(&self) -> Option<usize> {
        self.action
    }
}

impl Policy for FairFixedPolicy {
    fn family_name(&self) -> &str {
        "fair_fixed"
    }

    fn class_tag(&self) -> PolicyClass {
        PolicyClass::Pi0
    }

    fn fit(&mut self, _input: PolicyInput<'_>, losses: &LossMatrix, _seed: u64) -> Result<()> {
        self.action = Some(best_fixed_action(losses).0);
        Ok(())
    }

    fn predict(&self, input: PolicyInput<'_>) -> Result<Vec<usize>> {
        let a = self.action.ok_or_else(|| not_fitted("fair_fixed"))?;
        Ok(vec![a; input.n()])
    }
}
