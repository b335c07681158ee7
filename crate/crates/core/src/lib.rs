//! Coverage and capacity analysis for a finite disk with a fixed number of
//! uniformly placed access points.
//!
//! The analytic engine approximates the conditional SIR (or SINR) given the
//! serving distance by a lognormal whose parameters follow from matching the
//! first two moments of the interference. A Monte-Carlo simulator of the same
//! model provides ground truth.

pub mod closedform;
pub mod coverage;
pub mod design;
pub mod error;
pub mod geometry;
pub mod mma;
pub mod montecarlo;
pub mod perturb;
pub mod quadrature;
pub mod stats;

pub use coverage::{CoverageQuery, ErgodicCapacity};
pub use design::{DesignOutcome, DesignSpec, DesignTarget, Scenario};
pub use error::{Error, Result};
pub use geometry::{DiskGeometry, EvalPoint};
pub use mma::{InterferenceMoments, LognormalParams, NetworkModel};
pub use montecarlo::{ChannelDraw, SimConfig, SimEstimate};
pub use perturb::{PolyFit, TaylorCorrections};
