//! Fast safety assessment and correction for road maintenance work zones.
//!
//! The pipeline runs from trajectories to layout adjustments:
//!
//! 1. [`sim`] generates vehicle trajectories through a configurable work zone
//!    (or [`io`] ingests recorded ones).
//! 2. [`kinematics`] recovers speed, curvature and longitudinal/lateral
//!    acceleration from positions.
//! 3. [`detect`] extracts unsafe segments with dual-threshold short-time
//!    energy endpoint detection.
//! 4. [`classify`] types every segment as one of eleven behaviours.
//! 5. [`density`] maps segment locations per behaviour with a kernel density
//!    grid and reports cluster-center extrema per work-zone region.
//! 6. [`correction`] flags excessive densities and applies stepwise layout
//!    corrections until the zone assesses as safe.
//!
//! [`calibrate`] tunes the simulator's driving parameters with a 16-run
//! orthogonal design against observed speed distributions.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod calibrate;
pub mod classify;
pub mod correction;
pub mod density;
pub mod detect;
pub mod error;
pub mod io;
pub mod kinematics;
pub mod model;
pub mod par;
pub mod pipeline;
pub mod sim;
pub mod site;

pub use error::{Error, Result};
pub use par::Execution;
