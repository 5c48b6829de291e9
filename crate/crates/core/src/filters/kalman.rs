//! Linear Kalman filter on the shared six-dimensional state layout.

use nalgebra::{Matrix4, Matrix6, Vector6};

use crate::error::{ensure, Error, Result};
use crate::statespace::{
    state_index, CovarianceMethod, KinematicState, Measurement, MeasurementModel, ProcessNoiseModel, StateVector,
    TransitionModel,
};

/// `x(k+1) = F x(k) + w`, `w ~ N(0, Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub f: Matrix6<f64>,
    pub q: Matrix6<f64>,
}

/// Constant-velocity model with the acceleration rows zeroed, driven by a
/// piecewise-constant white acceleration of standard deviation `sigma`:
/// `Q = sigma² g gᵀ` with `g = [T²/2, T, 0]` per axis.
pub fn cv_model(t: f64, sigma: f64) -> Result<LinearModel> {
    ensure(t > 0.0 && t.is_finite(), || format!("sample period must be > 0, got {t}"))?;
    ensure(sigma >= 0.0 && sigma.is_finite(), || format!("sigma_cv must be >= 0, got {sigma}"))?;
    let mut f = Matrix6::zeros();
    for axis in 0..2 {
        let (p, v) = (state_index(axis, 0), state_index(axis, 1));
        f[(p, p)] = 1.0;
        f[(p, v)] = t;
        f[(v, v)] = 1.0;
    }
    Ok(LinearModel { f, q: discrete_noise(sigma, [t * t / 2.0, t, 0.0]) })
}

/// Constant-acceleration model driven by a white acceleration increment of
/// standard deviation `sigma` per sample: `Q = sigma² g gᵀ` with
/// `g = [T²/2, T, 1]` per axis.
pub fn ca_model(t: f64, sigma: f64) -> Result<LinearModel> {
    ensure(sigma >= 0.0 && sigma.is_finite(), || format!("sigma_ca must be >= 0, got {sigma}"))?;
    let f = TransitionModel::new(t, 0.0)?.phi;
    Ok(LinearModel { f, q: discrete_noise(sigma, [t * t / 2.0, t, 1.0]) })
}

fn discrete_noise(sigma: f64, g: [f64; 3]) -> Matrix6<f64> {
    let s2 = sigma * sigma;
    let mut q = Matrix6::zeros();
    for axis in 0..2 {
        for i in 0..3 {
            for j in 0..3 {
                q[(state_index(axis, i), state_index(axis, j))] = s2 * g[i] * g[j];
            }
        }
    }
    q
}

/// Singer-model filter with fixed acceleration-noise variance `h` on both
/// axes, i.e. the linear-Gaussian special case of the particle filters.
pub fn singer_model(t: f64, mu: f64, h: f64) -> Result<LinearModel> {
    let trans = TransitionModel::new(t, mu)?;
    let f = trans.phi;
    let q = ProcessNoiseModel::new(trans, CovarianceMethod::ClosedForm)?.covariance_raw(h, h);
    Ok(LinearModel { f, q })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanFilter {
    pub x: StateVector,
    pub p: Matrix6<f64>,
    pub model: LinearModel,
    pub meas: MeasurementModel,
}

impl KalmanFilter {
    pub fn new(x: StateVector, p: Matrix6<f64>, model: LinearModel, meas: MeasurementModel) -> Self {
        Self { x, p, model, meas }
    }

    /// Mean from the measured position/velocity with zero acceleration;
    /// diagonal covariance from the measurement variances and `acc_var`.
    pub fn from_measurement(y0: &Measurement, acc_var: f64, model: LinearModel, meas: MeasurementModel) -> Self {
        let x = Vector6::new(y0[0], y0[1], y0[2], y0[3], 0.0, 0.0);
        let p = Matrix6::from_diagonal(&Vector6::new(
            meas.sigma2_pos,
            meas.sigma2_pos,
            meas.sigma2_vel,
            meas.sigma2_vel,
            acc_var,
            acc_var,
        ));
        Self::new(x, p, model, meas)
    }

    pub fn predict(&mut self) {
        let f = &self.model.f;
        self.x = f * self.x;
        self.p = f * self.p * f.transpose() + self.model.q;
    }

    /// Measurement update; returns the innovation log-likelihood.
    pub fn update(&mut self, y: &Measurement) -> Result<f64> {
        let h = self.meas.h_matrix();
        let innov = y - h * self.x;
        let s: Matrix4<f64> = h * self.p * h.transpose() + self.meas.r_matrix();
        let chol = s.cholesky().ok_or(Error::SingularInnovation)?;
        let k = self.p * h.transpose() * chol.inverse();
        self.x += k * innov;
        // Joseph form keeps P symmetric positive semi-definite.
        let ikh = Matrix6::identity() - k * h;
        self.p = ikh * self.p * ikh.transpose() + k * self.meas.r_matrix() * k.transpose();
        let solved = chol.solve(&innov);
        let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(-0.5 * (innov.dot(&solved) + log_det + 4.0 * (2.0 * std::f64::consts::PI).ln()))
    }

    pub fn step(&mut self, y: &Measurement) -> Result<f64> {
        self.predict();
        self.update(y)
    }

    pub fn state(&self) -> KinematicState {
        KinematicState::from_vector(&self.x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cv_model_matches_four_state_filter() {
        let t = 0.5;
        let m = cv_model(t, 2.0).unwrap();
        let x = Vector6::new(1.0, 2.0, 3.0, 4.0, 9.0, 9.0);
        let y = m.f * x;
        assert_eq!(y, Vector6::new(1.0 + 3.0 * t, 2.0 + 4.0 * t, 3.0, 4.0, 0.0, 0.0));
        assert!((m.q[(0, 0)] - 4.0 * t.powi(4) / 4.0).abs() < 1e-15);
        assert!((m.q[(2, 2)] - 4.0 * t * t).abs() < 1e-15);
        assert_eq!(m.q[(4, 4)], 0.0);
    }

    #[test]
    fn ca_model_is_kinematic() {
        let t = 0.1;
        let m = ca_model(t, 1.0).unwrap();
        assert!((m.f[(0, 4)] - t * t / 2.0).abs() < 1e-15);
        assert_eq!(m.q[(4, 4)], 1.0);
        assert!((m.q[(0, 4)] - t * t / 2.0).abs() < 1e-15);
        assert_eq!(m.q[(0, 1)], 0.0);
    }

    #[test]
    fn scalar_update_against_hand_computation() {
        // Static model, unit variances: posterior mean is the average of
        // prior mean and measurement.
        let model = LinearModel { f: Matrix6::identity(), q: Matrix6::zeros() };
        let meas = MeasurementModel::new(1.0, 1.0).unwrap();
        let mut kf = KalmanFilter::new(Vector6::zeros(), Matrix6::identity(), model, meas);
        let y = Measurement::new(2.0, 4.0, -2.0, 0.0);
        let ll = kf.update(&y).unwrap();
        assert!((kf.x[0] - 1.0).abs() < 1e-14 && (kf.x[1] - 2.0).abs() < 1e-14 && (kf.x[2] + 1.0).abs() < 1e-14);
        assert!((kf.p[(0, 0)] - 0.5).abs() < 1e-14);
        // S = 2·I₄.
        let expect = -0.5 * ((4.0 + 16.0 + 4.0) / 2.0 + 4.0 * 2f64.ln() + 4.0 * (2.0 * std::f64::consts::PI).ln());
        assert!((ll - expect).abs() < 1e-12);
    }
}
