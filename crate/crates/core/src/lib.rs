//! Pole-landmark localization toolkit.
//!
//! The pipeline has three stages:
//!
//! - [`extract`]: density clustering, least-squares circle fitting and
//!   semantic pooling turn labeled points into [`PoleInstance`]s.
//! - [`map`]: world-frame instances are grouped per class by overlap
//!   connectivity and averaged into a multi-layer [`SemanticPoleMap`].
//! - [`localization`]: a Monte Carlo particle filter tracks an SE(2) pose
//!   against the map, optionally using semantic inconsistency and
//!   class-restricted nearest-neighbor association.
//!
//! [`sim`] generates seeded synthetic worlds and noise, [`eval`] scores maps
//! and trajectories, [`io`] holds the on-disk formats and [`experiment`]
//! wires everything into end-to-end runs.

pub mod cli;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod extract;
pub mod geometry;
pub mod io;
pub mod localization;
pub mod map;
pub mod rng;
pub mod sim;

#[cfg(test)]
mod test_oracles;

pub use error::{Error, Result};
pub use extract::{LabeledPoint, PoleInstance};
pub use geometry::{Circle, Pose2};
pub use localization::{FilterConfig, FilterState, Observation, Variant};
pub use map::{Landmark, SemanticPoleMap};
