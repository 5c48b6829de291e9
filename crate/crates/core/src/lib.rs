//! Maneuvering-target tracking with GARCH stochastic volatility.
//!
//! The crate is organised bottom-up:
//!
//! * [`garch`]: the AR(1)-GARCH(1,1) acceleration-volatility process, its
//!   moments and a Monte Carlo check of conditional heteroscedasticity.
//! * [`statespace`]: Singer-type kinematics, the exact transition matrix and
//!   the volatility-scaled process-noise covariance (closed form and
//!   quadrature).
//! * [`filters`]: the bootstrap particle filter over the volatility-augmented
//!   state, a fixed-variance particle filter, and a CV/CA IMM Kalman bank.
//! * [`scenarios`]: ground-truth trajectory and measurement generators.
//! * [`bench`]: Monte Carlo RMSE harness, particle-count sweeps and timing.

pub mod bench;
pub mod error;
pub mod filters;
pub mod garch;
pub mod rng;
pub mod scenarios;
pub mod statespace;

pub use error::{Error, Result};
