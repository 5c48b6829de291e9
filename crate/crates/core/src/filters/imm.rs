//! Interacting multiple model estimator over a CV and a CA Kalman filter.

use nalgebra::{Matrix6, Vector6};

use super::kalman::{ca_model, cv_model, KalmanFilter};
use super::TrackEstimate;
use crate::error::{ensure, Result};
use crate::statespace::{KinematicState, Measurement, MeasurementModel};

#[derive(Debug, Clone, PartialEq)]
pub struct ImmConfig {
    /// `p_ij[i][j]` = probability of switching from model `i` to model `j`;
    /// model 0 is CV, model 1 is CA.
    pub p_ij: [[f64; 2]; 2],
    pub sigma_cv: f64,
    pub sigma_ca: f64,
    pub meas: MeasurementModel,
    pub t: f64,
    pub init_probs: [f64; 2],
    /// Initial acceleration variance of both models.
    pub init_acc_var: f64,
}

impl ImmConfig {
    pub fn validate(&self) -> Result<()> {
        for row in &self.p_ij {
            ensure(row.iter().all(|p| *p >= 0.0 && p.is_finite()), || {
                format!("transition probabilities must be >= 0, got {:?}", self.p_ij)
            })?;
            ensure((row[0] + row[1] - 1.0).abs() < 1e-9, || {
                format!("transition matrix rows must sum to 1, got {:?}", self.p_ij)
            })?;
        }
        ensure(self.init_probs.iter().all(|p| *p >= 0.0) && (self.init_probs.iter().sum::<f64>() - 1.0).abs() < 1e-9, || {
            format!("initial model probabilities must be a distribution, got {:?}", self.init_probs)
        })?;
        ensure(self.init_acc_var >= 0.0 && self.init_acc_var.is_finite(), || {
            format!("initial acceleration variance must be >= 0, got {}", self.init_acc_var)
        })
    }
}

#[derive(Debug, Clone)]
pub struct ImmFilter {
    p_ij: [[f64; 2]; 2],
    models: [KalmanFilter; 2],
    probs: [f64; 2],
}

impl ImmFilter {
    pub fn new(cfg: &ImmConfig, y0: &Measurement) -> Result<Self> {
        cfg.validate()?;
        let cv = KalmanFilter::from_measurement(y0, cfg.init_acc_var, cv_model(cfg.t, cfg.sigma_cv)?, cfg.meas);
        let ca = KalmanFilter::from_measurement(y0, cfg.init_acc_var, ca_model(cfg.t, cfg.sigma_ca)?, cfg.meas);
        Ok(Self { p_ij: cfg.p_ij, models: [cv, ca], probs: cfg.init_probs })
    }

    pub fn model_probs(&self) -> [f64; 2] {
        self.probs
    }

    pub fn models(&self) -> &[KalmanFilter; 2] {
        &self.models
    }

    pub fn estimate(&self) -> TrackEstimate {
        let mut x = Vector6::zeros();
        for (m, mu) in self.models.iter().zip(self.probs) {
            x += m.x * mu;
        }
        TrackEstimate { kin_hat: KinematicState::from_vector(&x), vol_hat: None, model_probs: Some(self.probs) }
    }

    pub fn step(&mut self, y: &Measurement) -> Result<TrackEstimate> {
        // Mixing.
        let c: [f64; 2] = std::array::from_fn(|j| (0..2).map(|i| self.p_ij[i][j] * self.probs[i]).sum());
        let mut mixed: [(Vector6<f64>, Matrix6<f64>); 2] = std::array::from_fn(|j| (self.models[j].x, self.models[j].p));
        for j in 0..2 {
            if c[j] <= 0.0 {
                continue;
            }
            let w: [f64; 2] = std::array::from_fn(|i| self.p_ij[i][j] * self.probs[i] / c[j]);
            let mut x0 = Vector6::zeros();
            for i in 0..2 {
                x0 += self.models[i].x * w[i];
            }
            let mut p0 = Matrix6::zeros();
            for i in 0..2 {
                let d = self.models[i].x - x0;
                p0 += (self.models[i].p + d * d.transpose()) * w[i];
            }
            mixed[j] = (x0, p0);
        }
        // Model-matched filtering.
        let mut log_l = [0.0; 2];
        for j in 0..2 {
            let m = &mut self.models[j];
            (m.x, m.p) = mixed[j];
            log_l[j] = m.step(y)?;
        }
        // Probability update in the log domain.
        let log_post: [f64; 2] = std::array::from_fn(|j| c[j].ln() + log_l[j]);
        let max = log_post[0].max(log_post[1]);
        if max.is_finite() {
            let e: [f64; 2] = std::array::from_fn(|j| (log_post[j] - max).exp());
            let total = e[0] + e[1];
            self.probs = [e[0] / total, e[1] / total];
        } else {
            self.probs = c;
        }
        Ok(self.estimate())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn cfg(p_ij: [[f64; 2]; 2], init_probs: [f64; 2], sigma_cv: f64, sigma_ca: f64) -> ImmConfig {
        ImmConfig { p_ij, sigma_cv, sigma_ca, meas: MeasurementModel::default(), t: 0.1, init_probs, init_acc_var: 1.0 }
    }

    #[test]
    fn rejects_bad_transition_matrix() {
        let c = cfg([[0.9, 0.2], [0.1, 0.9]], [0.5, 0.5], 1.0, 1.0);
        assert!(ImmFilter::new(&c, &Measurement::zeros()).is_err());
    }

    #[test]
    fn identity_switching_reduces_to_cv_filter() {
        let c = cfg([[1.0, 0.0], [0.0, 1.0]], [1.0, 0.0], 0.5, 5.0);
        let meas = c.meas;
        let truth = KinematicState::new(100.0, -50.0, 10.0, 3.0, 0.0, 0.0);
        let mut rng = rng_from_seed(8);
        let y0 = meas.measure(&truth, &mut rng);
        let mut imm = ImmFilter::new(&c, &y0).unwrap();
        let mut kf = KalmanFilter::from_measurement(&y0, 1.0, cv_model(c.t, c.sigma_cv).unwrap(), meas);
        for _ in 0..50 {
            let y = meas.measure(&truth, &mut rng);
            let est = imm.step(&y).unwrap();
            kf.step(&y).unwrap();
            assert_eq!(est.kin_hat.to_vector(), kf.x);
            assert_eq!(est.model_probs, Some([1.0, 0.0]));
        }
    }

    #[test]
    fn probabilities_stay_normalised() {
        let c = cfg([[0.95, 0.05], [0.05, 0.95]], [0.5, 0.5], 0.5, 20.0);
        let meas = c.meas;
        let mut rng = rng_from_seed(2);
        let mut truth = KinematicState::new(0.0, 0.0, 5.0, 5.0, 3.0, -2.0);
        let mut imm = ImmFilter::new(&c, &meas.measure(&truth, &mut rng)).unwrap();
        for _ in 0..100 {
            truth.x += truth.vx * c.t + truth.ax * c.t * c.t / 2.0;
            truth.y += truth.vy * c.t + truth.ay * c.t * c.t / 2.0;
            truth.vx += truth.ax * c.t;
            truth.vy += truth.ay * c.t;
            let p = imm.step(&meas.measure(&truth, &mut rng)).unwrap().model_probs.unwrap();
            assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cv_model_wins_on_constant_velocity_truth() {
        let c = cfg([[0.95, 0.05], [0.05, 0.95]], [0.5, 0.5], 0.01, 10.0);
        let meas = MeasurementModel::new(1.0, 0.01).unwrap();
        let c = ImmConfig { meas, ..c };
        let runs = 200;
        let mut wins = 0;
        for seed in 0..runs {
            let mut rng = rng_from_seed(1000 + seed);
            let mut truth = KinematicState::new(0.0, 0.0, 12.0, -7.0, 0.0, 0.0);
            let mut imm = ImmFilter::new(&c, &meas.measure(&truth, &mut rng)).unwrap();
            for _ in 0..20 {
                truth.x += truth.vx * c.t;
                truth.y += truth.vy * c.t;
                imm.step(&meas.measure(&truth, &mut rng)).unwrap();
            }
            if imm.model_probs()[0] > 0.5 {
                wins += 1;
            }
        }
        assert!(wins as f64 >= 0.95 * runs as f64, "CV won {wins}/{runs}");
    }
}
