//! Extended object tracking from fused active and passive multistatic radio
//! measurements.
//!
//! A radio device is rigidly mounted on an extended object (EO). Each anchor
//! receives the device's signal (active measurements: line-of-sight path plus
//! scatter) and every ordered anchor pair exchanges signals that bounce off the
//! EO (passive measurements). A particle filter with probabilistic data
//! association estimates the EO kinematics, the device mounting offset, and
//! the EO extent jointly.
//!
//! Module map:
//!
//! - [`types`]: states, anchors, measurements, and the device-position map
//! - [`geometry`]: per-anchor scattering ellipses and scatterer samplers
//! - [`likelihood`]: measurement densities and association likelihood ratios
//! - [`motion`]: state-transition sampling and the prior
//! - [`synthesis`]: ground truth and synthetic measurement frames
//! - [`tracker`]: the particle filter and its four method variants
//! - [`evaluation`]: RMSE, error CDFs and run summaries
//! - [`scenario`]: JSON scenario schema with the reference defaults
//! - [`io`]: CSV readers and writers for datasets, ground truth and tracks

pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod io;
pub mod likelihood;
pub mod motion;
pub mod scenario;
pub mod seed;
pub mod synthesis;
pub mod tracker;
pub mod types;

pub use error::{Error, Result};
pub use types::*;
