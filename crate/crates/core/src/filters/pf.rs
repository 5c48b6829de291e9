//! Bootstrap particle filters over the kinematic state, with either a
//! GARCH(1,1) volatility per particle or a fixed process-noise variance.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::resample::{resample, Resampler};
use super::{Ensemble, Particle, StepDiagnostics, TrackEstimate};
use crate::error::{ensure, Result};
use crate::garch::GarchParams;
use crate::rng::{rng_from_seed, SimRng};
use crate::statespace::{
    AugmentedState, CovarianceMethod, KinematicState, Measurement, MeasurementModel, ProcessNoiseModel,
    TransitionModel, VolatilityPair,
};

/// Standard deviations of the initial particle cloud around the first
/// measurement; accelerations are centred on zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpread {
    pub pos: f64,
    pub vel: f64,
    pub acc: f64,
}

impl PriorSpread {
    fn validate(&self) -> Result<()> {
        ensure([self.pos, self.vel, self.acc].iter().all(|s| *s >= 0.0 && s.is_finite()), || {
            format!("prior spreads must be finite and >= 0, got {self:?}")
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PfGarchConfig {
    pub n_s: usize,
    pub garch_x: GarchParams,
    pub garch_y: GarchParams,
    pub trans: TransitionModel,
    pub meas: MeasurementModel,
    pub prior_spread: PriorSpread,
    pub h0: f64,
    pub resampler: Resampler,
    pub ess_fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PfPlainConfig {
    pub n_s: usize,
    /// Fixed acceleration-noise variance on both axes.
    pub variance: f64,
    pub trans: TransitionModel,
    pub meas: MeasurementModel,
    pub prior_spread: PriorSpread,
    pub resampler: Resampler,
    pub ess_fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VolatilityLaw {
    Garch { x: GarchParams, y: GarchParams },
    Fixed(f64),
}

impl VolatilityLaw {
    #[inline]
    fn advance(&self, vol: &VolatilityPair, z_prev: &[f64; 2]) -> VolatilityPair {
        match self {
            Self::Garch { x, y } => VolatilityPair {
                hx: x.next_variance(vol.hx, z_prev[0]),
                hy: y.next_variance(vol.hy, z_prev[1]),
            },
            Self::Fixed(h) => VolatilityPair { hx: *h, hy: *h },
        }
    }
}

struct Common {
    n_s: usize,
    trans: TransitionModel,
    meas: MeasurementModel,
    prior: PriorSpread,
    resampler: Resampler,
    ess_fraction: f64,
    seed: u64,
}

impl Common {
    fn validate(&self) -> Result<()> {
        ensure(self.n_s >= 2, || format!("particle count must be >= 2, got {}", self.n_s))?;
        ensure(self.ess_fraction > 0.0 && self.ess_fraction <= 1.0, || {
            format!("ess_fraction must lie in (0, 1], got {}", self.ess_fraction)
        })?;
        self.prior.validate()
    }
}

/// Bootstrap particle filter: prior proposal, likelihood weighting and
/// resampling when the effective sample size drops below
/// `ess_fraction * n_s`.
pub struct ParticleFilter {
    law: VolatilityLaw,
    meas: MeasurementModel,
    noise: ProcessNoiseModel,
    resampler: Resampler,
    ess_fraction: f64,
    ensemble: Ensemble,
    rng: SimRng,
    last: Option<StepDiagnostics>,
}

impl ParticleFilter {
    /// Initialise the volatility-augmented filter from the first measurement.
    pub fn garch(cfg: &PfGarchConfig, y0: &Measurement) -> Result<Self> {
        ensure(cfg.h0 > 0.0 && cfg.h0.is_finite(), || format!("h0 must be > 0, got {}", cfg.h0))?;
        let common = Common {
            n_s: cfg.n_s,
            trans: cfg.trans.clone(),
            meas: cfg.meas,
            prior: cfg.prior_spread,
            resampler: cfg.resampler,
            ess_fraction: cfg.ess_fraction,
            seed: cfg.seed,
        };
        Self::build(common, VolatilityLaw::Garch { x: cfg.garch_x, y: cfg.garch_y }, cfg.h0, y0)
    }

    /// Initialise the fixed-variance filter from the first measurement.
    pub fn plain(cfg: &PfPlainConfig, y0: &Measurement) -> Result<Self> {
        ensure(cfg.variance > 0.0 && cfg.variance.is_finite(), || {
            format!("process-noise variance must be > 0, got {}", cfg.variance)
        })?;
        let common = Common {
            n_s: cfg.n_s,
            trans: cfg.trans.clone(),
            meas: cfg.meas,
            prior: cfg.prior_spread,
            resampler: cfg.resampler,
            ess_fraction: cfg.ess_fraction,
            seed: cfg.seed,
        };
        Self::build(common, VolatilityLaw::Fixed(cfg.variance), cfg.variance, y0)
    }

    fn build(common: Common, law: VolatilityLaw, h0: f64, y0: &Measurement) -> Result<Self> {
        common.validate()?;
        ensure(y0.iter().all(|v| v.is_finite()), || format!("first measurement is not finite: {y0:?}"))?;
        let mut rng = rng_from_seed(common.seed);
        let noise = ProcessNoiseModel::new(common.trans, CovarianceMethod::ClosedForm)?;
        let vol = VolatilityPair::uniform(h0)?;
        let w = 1.0 / common.n_s as f64;
        let prior = common.prior;
        let particles = (0..common.n_s)
            .map(|_| {
                let mut draw = |mean: f64, sd: f64| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    mean + sd * e
                };
                let kin = KinematicState {
                    x: draw(y0[0], prior.pos),
                    y: draw(y0[1], prior.pos),
                    vx: draw(y0[2], prior.vel),
                    vy: draw(y0[3], prior.vel),
                    ax: draw(0.0, prior.acc),
                    ay: draw(0.0, prior.acc),
                };
                Particle { state: AugmentedState { kin, vol }, weight: w, z_prev: [0.0; 2] }
            })
            .collect();
        Ok(Self {
            law,
            meas: common.meas,
            noise,
            resampler: common.resampler,
            ess_fraction: common.ess_fraction,
            ensemble: Ensemble { particles, degeneracy_events: 0 },
            rng,
            last: None,
        })
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ensemble
    }

    pub fn estimate(&self) -> TrackEstimate {
        self.finish_estimate(self.ensemble.weighted_mean())
    }

    fn finish_estimate(&self, (kin, vol): (KinematicState, VolatilityPair)) -> TrackEstimate {
        let vol = matches!(self.law, VolatilityLaw::Garch { .. }).then_some(vol);
        TrackEstimate { kin_hat: kin, vol_hat: vol, model_probs: None }
    }

    /// One filtering cycle: propagate, weight, normalise, estimate, and
    /// resample if the ensemble has degenerated.
    pub fn step(&mut self, y: &Measurement) -> (TrackEstimate, StepDiagnostics) {
        let trans = &self.noise.trans;
        let mut log_w = Vec::with_capacity(self.ensemble.n_s());
        for p in &mut self.ensemble.particles {
            let vol = self.law.advance(&p.state.vol, &p.z_prev);
            let draw = self.noise.sample(&vol, &mut self.rng);
            let kin = trans.propagate(&p.state.kin, &draw.noise);
            p.state = AugmentedState { kin, vol };
            p.z_prev = draw.z_accel;
            log_w.push(p.weight.ln() + self.meas.log_likelihood(&kin, y));
        }
        let degenerate = !self.ensemble.set_log_weights(&log_w);
        let ess = self.ensemble.ess();
        let estimate = self.estimate();
        let resampled = ess < self.ess_fraction * self.ensemble.n_s() as f64;
        if resampled {
            self.ensemble = resample(&self.ensemble, self.resampler, &mut self.rng);
        }
        let diag = StepDiagnostics { ess, resampled, degenerate };
        self.last = Some(diag);
        (estimate, diag)
    }

    /// Diagnostics of the most recent step.
    pub fn last_diagnostics(&self) -> Option<StepDiagnostics> {
        self.last
    }

    /// Propagate one particle without weighting; exposed for tests of the
    /// time-propagation block.
    pub fn propagate_particle(&mut self, p: &Particle) -> Particle {
        let vol = self.law.advance(&p.state.vol, &p.z_prev);
        let draw = self.noise.sample(&vol, &mut self.rng);
        let kin = self.noise.trans.propagate(&p.state.kin, &draw.noise);
        Particle { state: AugmentedState { kin, vol }, weight: p.weight, z_prev: draw.z_accel }
    }
}
