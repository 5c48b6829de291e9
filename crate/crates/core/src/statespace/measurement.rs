use nalgebra::{Matrix4, Matrix4x6, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::KinematicState;
use crate::error::{ensure, Error, Result};

/// Observed `[x, y, vx, vy]`.
pub type Measurement = Vector4<f64>;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Linear position/velocity sensor with independent Gaussian errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasurementModel")]
pub struct MeasurementModel {
    /// Position error variance, m^2.
    pub sigma2_pos: f64,
    /// Velocity error variance, (m/s)^2.
    pub sigma2_vel: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasurementModel {
    sigma2_pos: f64,
    sigma2_vel: f64,
}

impl TryFrom<RawMeasurementModel> for MeasurementModel {
    type Error = Error;

    fn try_from(raw: RawMeasurementModel) -> Result<Self> {
        MeasurementModel::new(raw.sigma2_pos, raw.sigma2_vel)
    }
}

impl Default for MeasurementModel {
    fn default() -> Self {
        Self { sigma2_pos: 1.0e4, sigma2_vel: 25.0 }
    }
}

impl MeasurementModel {
    pub fn new(sigma2_pos: f64, sigma2_vel: f64) -> Result<Self> {
        ensure(sigma2_pos > 0.0 && sigma2_pos.is_finite(), || {
            format!("position variance must be > 0, got {sigma2_pos}")
        })?;
        ensure(sigma2_vel > 0.0 && sigma2_vel.is_finite(), || {
            format!("velocity variance must be > 0, got {sigma2_vel}")
        })?;
        Ok(Self { sigma2_pos, sigma2_vel })
    }

    pub fn variances(&self) -> [f64; 4] {
        [self.sigma2_pos, self.sigma2_pos, self.sigma2_vel, self.sigma2_vel]
    }

    pub fn h_matrix(&self) -> Matrix4x6<f64> {
        Matrix4x6::identity()
    }

    pub fn r_matrix(&self) -> Matrix4<f64> {
        Matrix4::from_diagonal(&Vector4::from(self.variances()))
    }

    /// Noise-free observation `H X`.
    pub fn predict(&self, state: &KinematicState) -> Measurement {
        Vector4::new(state.x, state.y, state.vx, state.vy)
    }

    /// `y = H X + eps`, `eps ~ N(0, R)`.
    pub fn measure<R: Rng + ?Sized>(&self, state: &KinematicState, rng: &mut R) -> Measurement {
        let clean = self.predict(state);
        let var = self.variances();
        Vector4::from_fn(|i, _| clean[i] + var[i].sqrt() * rng.sample::<f64, _>(StandardNormal))
    }

    /// `ln N(y; H X, R)`.
    pub fn log_likelihood(&self, state: &KinematicState, y: &Measurement) -> f64 {
        let clean = self.predict(state);
        let var = self.variances();
        let mut quad = 0.0;
        let mut log_det = 0.0;
        for i in 0..4 {
            let r = y[i] - clean[i];
            quad += r * r / var[i];
            log_det += var[i].ln();
        }
        -0.5 * (quad + log_det + 4.0 * LN_2PI)
    }

    pub fn likelihood(&self, state: &KinematicState, y: &Measurement) -> f64 {
        self.log_likelihood(state, y).exp()
    }
}
