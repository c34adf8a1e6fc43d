//! Family pools: serializable descriptions of controller families.

use serde::{Deserialize, Serialize};

use super::boosting::BoostConfig;
use super::fixed::ActionRef;
use super::{
    CartRouter, FairFixedPolicy, FixedPolicy, HgbcPolicy, KMeansRouter, MozannarPolicy, NarasimhanPolicy, Policy,
    PolicyClass, PriorGatedPolicy, SelectivePlugin, ThresholdGate,
};
use crate::{Error, Result};

fn default_min_cell() -> usize {
    super::routers::MIN_CELL
}

fn default_leaf() -> usize {
    5
}

fn default_c() -> f64 {
    0.3
}

fn default_tau() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    AlwaysAction { action: ActionRef },
    FairFixed,
    Kmeans {
        k: usize,
        #[serde(default = "default_min_cell")]
        min_cell: usize,
    },
    Cart {
        max_depth: usize,
        #[serde(default = "default_leaf")]
        min_samples_leaf: usize,
    },
    Selective {
        #[serde(default = "default_c")]
        c: f64,
    },
    Logistic {
        #[serde(default = "default_c")]
        c: f64,
    },
    Hgbc {
        max_depth: usize,
        #[serde(default)]
        n_rounds: Option<usize>,
        #[serde(default)]
        learning_rate: Option<f64>,
    },
    Mozannar {
        #[serde(default = "default_c")]
        c: f64,
    },
    Narasimhan { max_depth: usize },
    PriorGated {
        #[serde(default = "default_tau")]
        tau: f64,
        high: ActionRef,
        low: ActionRef,
        fallback: Box<FamilySpec>,
    },
}

impl FamilySpec {
    pub fn class(&self) -> PolicyClass {
        match self {
            Self::AlwaysAction { .. } | Self::FairFixed => PolicyClass::Pi0,
            Self::Kmeans { .. } | Self::Cart { .. } => PolicyClass::Pi1,
            Self::Selective { .. } | Self::Logistic { .. } | Self::Hgbc { .. } | Self::Mozannar { .. } | Self::Narasimhan { .. } => {
                PolicyClass::Pi2
            }
            Self::PriorGated { .. } => PolicyClass::Pi3,
        }
    }

    /// A fresh, unfitted controller.
    pub fn build(&self) -> Result<Box<dyn Policy>> {
        Ok(match self {
            Self::AlwaysAction { action } => Box::new(FixedPolicy::new(action.clone())),
            Self::FairFixed => Box::new(FairFixedPolicy::new()),
            Self::Kmeans { k, min_cell } => Box::new(KMeansRouter::with_min_cell(*k, *min_cell)),
            Self::Cart { max_depth, min_samples_leaf } => {
                Box::new(CartRouter::new(*max_depth).with_min_samples_leaf(*min_samples_leaf))
            }
            Self::Selective { c } => Box::new(SelectivePlugin::new(*c)),
            Self::Logistic { c } => Box::new(SelectivePlugin::uncalibrated(*c)),
            Self::Hgbc { max_depth, n_rounds, learning_rate } => {
                let d = BoostConfig::with_depth(*max_depth);
                Box::new(HgbcPolicy::with_config(BoostConfig {
                    n_rounds: n_rounds.unwrap_or(d.n_rounds),
                    learning_rate: learning_rate.unwrap_or(d.learning_rate),
                    ..d
                }))
            }
            Self::Mozannar { c } => Box::new(MozannarPolicy::new(*c)),
            Self::Narasimhan { max_depth } => Box::new(NarasimhanPolicy::new(*max_depth)),
            Self::PriorGated { tau, high, low, fallback } => {
                if fallback.class() == PolicyClass::Pi3 {
                    return Err(Error::invalid("a prior-gated fallback cannot itself be prior-gated"));
                }
                Box::new(PriorGatedPolicy::new(ThresholdGate::new(*tau, high.clone(), low.clone()), fallback.build()?)?)
            }
        })
    }
}

/// One pool member: a family spec plus an optional display name and an
/// optional class tag, which must agree with the family when given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_tag: Option<PolicyClass>,
    #[serde(flatten)]
    pub spec: FamilySpec,
}

impl FamilyEntry {
    pub fn new(spec: FamilySpec) -> Self {
        Self { name: None, class_tag: None, spec }
    }

    pub fn class(&self) -> PolicyClass {
        self.spec.class()
    }

    pub fn build(&self) -> Result<Box<dyn Policy>> {
        self.spec.build()
    }

    pub fn display_name(&self) -> Result<String> {
        match &self.name {
            Some(n) => Ok(n.clone()),
            None => Ok(self.build()?.family_name().to_owned()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolConfig {
    pub families: Vec<FamilyEntry>,
}

impl PoolConfig {
    /// always_direct, fair_fixed, KMeans K in {4, 5, 6, 8}, HGBC depth 3 and 4,
    /// and the calibrated logistic plug-in with C = 0.3.
    pub fn canonical() -> Self {
        let mut families = vec![
            FamilySpec::AlwaysAction { action: "direct".into() },
            FamilySpec::FairFixed,
        ];
        families.extend([4, 5, 6, 8].map(|k| FamilySpec::Kmeans { k, min_cell: default_min_cell() }));
        families.extend([3, 4].map(|max_depth| FamilySpec::Hgbc { max_depth, n_rounds: None, learning_rate: None }));
        families.push(FamilySpec::Selective { c: 0.3 });
        Self { families: families.into_iter().map(FamilyEntry::new).collect() }
    }

    /// The canonical pool plus CART depth 3/4, Mozannar C in {0.3, 1.0} and
    /// Narasimhan depth 3/4.
    pub fn extended() -> Self {
        let mut pool = Self::canonical();
        let extra = [
            FamilySpec::Cart { max_depth: 3, min_samples_leaf: 5 },
            FamilySpec::Cart { max_depth: 4, min_samples_leaf: 5 },
            FamilySpec::Mozannar { c: 0.3 },
            FamilySpec::Mozannar { c: 1.0 },
            FamilySpec::Narasimhan { max_depth: 3 },
            FamilySpec::Narasimhan { max_depth: 4 },
        ];
        pool.families.extend(extra.into_iter().map(FamilyEntry::new));
        pool
    }

    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() {
            return Err(Error::invalid("the family pool is empty"));
        }
        let mut names = Vec::new();
        for f in &self.families {
            if let Some(tag) = f.class_tag {
                if tag != f.class() {
                    return Err(Error::invalid(format!(
                        "family {:?} is tagged {tag} but belongs to {}",
                        f.name.as_deref().unwrap_or("?"),
                        f.class()
                    )));
                }
            }
            let name = f.display_name()?;
            if names.contains(&name) {
                return Err(Error::invalid(format!("duplicate family name `{name}`")));
            }
            names.push(name);
        }
        Ok(())
    }

    pub fn names(&self) -> Result<Vec<String>> {
        self.families.iter().map(FamilyEntry::display_name).collect()
    }
}

impl Default for PoolConfig {
    fn default() -> Self {
        Self::canonical()
    }
}
