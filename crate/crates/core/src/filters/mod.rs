//! Estimators: the volatility-augmented particle filter, a fixed-variance
//! particle filter, and an IMM bank of Kalman filters.

mod config;
mod imm;
mod kalman;
mod pf;
mod resample;

pub use config::{build_tracker, FilterKind, FilterSpec, ImmSettings, PfGarchSettings, PfSettings};
pub use imm::{ImmConfig, ImmFilter};
pub use kalman::{ca_model, cv_model, singer_model, KalmanFilter, LinearModel};
pub use pf::{ParticleFilter, PfGarchConfig, PfPlainConfig, PriorSpread};
pub use resample::{resample, resample_indices, Resampler};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::statespace::{AugmentedState, KinematicState, Measurement, VolatilityPair};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub state: AugmentedState,
    pub weight: f64,
    /// Acceleration innovation of the previous step, per axis.
    pub z_prev: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub particles: Vec<Particle>,
    /// Steps on which every weight underflowed and the weights were reset.
    pub degeneracy_events: usize,
}

impl Ensemble {
    pub fn n_s(&self) -> usize {
        self.particles.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.weight).collect()
    }

    pub fn ess(&self) -> f64 {
        effective_sample_size(&self.weights())
    }

    /// Rescale weights to sum to one. A zero or non-finite total resets them
    /// to uniform, counts a degeneracy event and returns `false`.
    pub fn normalize(&mut self) -> bool {
        let total: f64 = self.particles.iter().map(|p| p.weight).sum();
        if total > 0.0 && total.is_finite() {
            for p in &mut self.particles {
                p.weight /= total;
            }
            true
        } else {
            self.reset_uniform();
            false
        }
    }

    /// Install weights given in the log domain (unnormalised).
    pub fn set_log_weights(&mut self, log_w: &[f64]) -> bool {
        debug_assert_eq!(log_w.len(), self.n_s());
        let max = log_w.iter().copied().filter(|v| !v.is_nan()).fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            self.reset_uniform();
            return false;
        }
        for (p, lw) in self.particles.iter_mut().zip(log_w) {
            p.weight = if lw.is_nan() { 0.0 } else { (lw - max).exp() };
        }
        self.normalize()
    }

    fn reset_uniform(&mut self) {
        let w = 1.0 / self.n_s() as f64;
        for p in &mut self.particles {
            p.weight = w;
        }
        self.degeneracy_events += 1;
    }

    /// Weighted mean of kinematics and volatilities.
    pub fn weighted_mean(&self) -> (KinematicState, VolatilityPair) {
        let mut k = [0.0; 6];
        let (mut hx, mut hy) = (0.0, 0.0);
        for p in &self.particles {
            for (acc, v) in k.iter_mut().zip(p.state.kin.to_array()) {
                *acc += p.weight * v;
            }
            hx += p.weight * p.state.vol.hx;
            hy += p.weight * p.state.vol.hy;
        }
        (KinematicState::new(k[0], k[1], k[2], k[3], k[4], k[5]), VolatilityPair { hx, hy })
    }
}

/// `1 / Σ w²` for normalised weights.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackEstimate {
    pub kin_hat: KinematicState,
    /// Posterior-mean volatility, reported by the volatility-augmented filter only.
    pub vol_hat: Option<VolatilityPair>,
    /// `[P(CV), P(CA)]`, reported by the IMM only.
    pub model_probs: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub ess: f64,
    pub resampled: bool,
    /// All weights underflowed on this step.
    pub degenerate: bool,
}

/// Common driver interface over the three estimators.
pub trait Tracker: Send {
    /// Estimate at the initialisation measurement.
    fn estimate(&self) -> TrackEstimate;
    fn step(&mut self, y: &Measurement) -> Result<TrackEstimate>;
    fn degeneracy_events(&self) -> usize {
        0
    }
    /// Particle diagnostics of the most recent step, if the tracker has any.
    fn diagnostics(&self) -> Option<StepDiagnostics> {
        None
    }
}

impl Tracker for ParticleFilter {
    fn estimate(&self) -> TrackEstimate {
        ParticleFilter::estimate(self)
    }

    fn step(&mut self, y: &Measurement) -> Result<TrackEstimate> {
        Ok(ParticleFilter::step(self, y).0)
    }

    fn degeneracy_events(&self) -> usize {
        self.ensemble().degeneracy_events
    }

    fn diagnostics(&self) -> Option<StepDiagnostics> {
        self.last_diagnostics()
    }
}

impl Tracker for KalmanFilter {
    fn estimate(&self) -> TrackEstimate {
        TrackEstimate { kin_hat: self.state(), vol_hat: None, model_probs: None }
    }

    fn step(&mut self, y: &Measurement) -> Result<TrackEstimate> {
        KalmanFilter::step(self, y)?;
        Ok(Tracker::estimate(self))
    }
}

impl Tracker for ImmFilter {
    fn estimate(&self) -> TrackEstimate {
        ImmFilter::estimate(self)
    }

    fn step(&mut self, y: &Measurement) -> Result<TrackEstimate> {
        ImmFilter::step(self, y)
    }
}

/// Run a tracker over measurements `ys[1..]`, initialised on `ys[0]` by the
/// caller; returns one estimate per measurement including the first.
pub fn run_tracker(tracker: &mut dyn Tracker, ys: &[Measurement]) -> Result<Vec<TrackEstimate>> {
    let mut out = Vec::with_capacity(ys.len());
    if ys.is_empty() {
        return Ok(out);
    }
    out.push(tracker.estimate());
    for y in &ys[1..] {
        out.push(tracker.step(y)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::{KinematicState, VolatilityPair};

    fn ensemble(weights: &[f64]) -> Ensemble {
        let state = AugmentedState { kin: KinematicState::default(), vol: VolatilityPair { hx: 1.0, hy: 1.0 } };
        Ensemble {
            particles: weights.iter().map(|&weight| Particle { state, weight, z_prev: [0.0; 2] }).collect(),
            degeneracy_events: 0,
        }
    }

    #[test]
    fn ess_examples() {
        assert_eq!(effective_sample_size(&[0.5, 0.5, 0.0, 0.0]), 2.0);
        let n = 40;
        let w = vec![1.0 / n as f64; n];
        assert!((effective_sample_size(&w) - n as f64).abs() < 1e-9);
    }

    #[test]
    fn log_weights_survive_underflow() {
        let mut e = ensemble(&[0.25; 4]);
        assert!(e.set_log_weights(&[-2000.0, -2001.0, -5000.0, -2000.0]));
        let w = e.weights();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((w[0] - w[3]).abs() < 1e-15 && w[0] > w[1]);
    }

    #[test]
    fn all_zero_weights_reset_and_count() {
        let mut e = ensemble(&[0.25; 4]);
        assert!(!e.set_log_weights(&[f64::NEG_INFINITY; 4]));
        assert_eq!(e.weights(), vec![0.25; 4]);
        assert_eq!(e.degeneracy_events, 1);
        assert!(!e.set_log_weights(&[f64::NAN; 4]));
        assert_eq!(e.degeneracy_events, 2);
    }
}
