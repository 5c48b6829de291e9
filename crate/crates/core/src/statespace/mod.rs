//! Target kinematics, exact discretisation and the volatility-driven
//! process-noise model.
//!
//! State vectors are ordered `[x, y, vx, vy, ax, ay]`.

mod measurement;
mod noise;
mod transition;

pub use measurement::{Measurement, MeasurementModel};
pub use noise::{
    gauss_legendre, unit_axis_closed_form, unit_axis_quadrature, CovarianceMethod,
    ProcessNoiseModel, ProcessNoiseSample,
};
pub use transition::{decay, phi1, phi2, TransitionModel};

use nalgebra::Vector6;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

pub type StateVector = Vector6<f64>;

/// Position (m), velocity (m/s) and acceleration (m/s^2) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinematicState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub ax: f64,
    pub ay: f64,
}

impl KinematicState {
    pub fn new(x: f64, y: f64, vx: f64, vy: f64, ax: f64, ay: f64) -> Self {
        Self { x, y, vx, vy, ax, ay }
    }

    pub fn to_vector(&self) -> StateVector {
        Vector6::new(self.x, self.y, self.vx, self.vy, self.ax, self.ay)
    }

    pub fn from_vector(v: &StateVector) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.x, self.y, self.vx, self.vy, self.ax, self.ay]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|c| c.is_finite())
    }
}

/// Per-axis conditional acceleration variance, (m/s^2)^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolatilityPair {
    pub hx: f64,
    pub hy: f64,
}

impl VolatilityPair {
    pub fn new(hx: f64, hy: f64) -> Result<Self> {
        ensure(hx > 0.0 && hx.is_finite() && hy > 0.0 && hy.is_finite(), || {
            format!("volatilities must be finite and > 0, got ({hx}, {hy})")
        })?;
        Ok(Self { hx, hy })
    }

    pub fn uniform(h: f64) -> Result<Self> {
        Self::new(h, h)
    }
}

/// Kinematic state augmented with the per-axis volatility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentedState {
    pub kin: KinematicState,
    pub vol: VolatilityPair,
}

/// Index of `(axis, order)` in the state vector; axis 0 = x, 1 = y and order
/// 0/1/2 = position/velocity/acceleration.
#[inline]
pub(crate) const fn state_index(axis: usize, order: usize) -> usize {
    2 * order + axis
}
