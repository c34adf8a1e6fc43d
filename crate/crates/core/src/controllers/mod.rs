//! The controller lattice and the learners behind it.
//!
//! Every controller implements [`Policy`]. Fixed policies are `Pi0`,
//! KMeans/CART routers are `Pi1`, the logistic and boosted plug-ins and the
//! two learning-to-defer adaptations are `Pi2`, and [`PriorGatedPolicy`] is
//! `Pi3`.

pub mod boosting;
pub mod cart;
mod features;
mod fixed;
mod gated;
pub mod kmeans;
mod l2d;
pub mod logistic;
mod plugin;
mod policy;
mod pool;
mod routers;

pub use features::{FeatureMatrix, Standardizer, STD_FLOOR};
pub use fixed::{ActionRef, FairFixedPolicy, FixedPolicy};
pub use gated::{PriorChannel, PriorGate, PriorGatedPolicy, ThresholdGate};
pub use l2d::{replicate, MozannarPolicy, NarasimhanPolicy};
pub use plugin::{HgbcPolicy, PluginRule, SelectivePlugin, CALIBRATION_FRACTION};
pub(crate) use policy::not_fitted;
pub use policy::{Policy, PolicyClass, PolicyInput};
pub use pool::{FamilyEntry, FamilySpec, PoolConfig};
pub use routers::{cell_actions, CartRouter, KMeansRouter, MIN_CELL};
