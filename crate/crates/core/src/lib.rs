//! Controller-class selection under finite samples.
//!
//! A controller maps each input to one action from a small action set
//! (direct, retrieve, defer, abstain). The crate works with four nested
//! controller classes:
//!
//! - `Pi0`: a fixed action for every input,
//! - `Pi1`: a partition router that plays one action per cell,
//! - `Pi2`: an instance-level learned controller,
//! - `Pi3`: a prior-gated controller that consults a side channel the other
//!   classes never see and otherwise defers to a lower-class fallback.
//!
//! [`diagnostics`] computes the data-estimable regime quantities (residual
//! bound, AUC margin and Bernstein viability threshold, partition gains,
//! the two adaptive ceilings) and predicts which class should win.
//! [`cv`] runs strict nested cross-validation over a family pool drawn from
//! [`controllers`]. [`synth`] holds the controlled data-generating processes
//! and sweep runners, and [`io`] binds everything to CSV/JSON files and the
//! `regime` command-line tool.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod controllers;
pub mod cv;
pub mod diagnostics;
mod error;
pub mod io;
pub mod loss;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use loss::{ActionSet, LossComponents, LossMatrix, SelectiveConstants, Weights};
