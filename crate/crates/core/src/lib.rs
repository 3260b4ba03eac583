//! Time-of-arrival mobile positioning in a CDMA-style cellular downlink.
//!
//! The crate models the downlink channel from each base station as a set of
//! time-evolving multipath components, turns it into noisy channel impulse
//! response estimates, averages those into a power delay profile, detects
//! the first path with one of three adaptive thresholds, and multilaterates
//! the mobile from the resulting pseudo-ranges.
//!
//! Everything here is `no_std` (with `alloc`) and deterministic given an
//! explicit RNG. File formats, the command line and parallel execution live
//! in the companion `toaloc` crate.
//!
//! Pipeline, bottom-up:
//!
//! - [`propagation`]: path loss, LOS/NLOS draw, scatterer components with
//!   birth/death dynamics and half-sine fading, tap rendering.
//! - [`receiver`]: estimation noise and non-coherent PDP averaging.
//! - [`firstpath`]: the three threshold rules and the first-path detector.
//! - [`locate`]: linearized least squares with residual subset selection.
//! - [`scenario`]: 19-site hex network, evaluation points, campaigns and
//!   error statistics.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod firstpath;
pub mod geometry;
pub mod locate;
pub mod propagation;
pub mod receiver;
pub mod scenario;

pub use error::Error;
pub use geometry::Point;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// WCDMA chip period, seconds.
pub const CHIP_PERIOD_S: f64 = 1.0 / 3.84e6;
