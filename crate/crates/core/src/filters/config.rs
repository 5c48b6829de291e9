//! Serializable filter settings and construction of trackers from them.

use serde::{Deserialize, Serialize};

use super::imm::{ImmConfig, ImmFilter};
use super::pf::{ParticleFilter, PfGarchConfig, PfPlainConfig, PriorSpread};
use super::resample::Resampler;
use super::Tracker;
use crate::error::Result;
use crate::garch::GarchParams;
use crate::statespace::{Measurement, MeasurementModel, TransitionModel};

fn default_ess_fraction() -> f64 {
    0.5
}

fn default_init_probs() -> [f64; 2] {
    [0.5, 0.5]
}

fn default_init_acc_var() -> f64 {
    100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PfGarchSettings {
    pub n_s: usize,
    /// Manoeuvre-decay rate of the acceleration model (1/s).
    pub mu: f64,
    pub garch_x: GarchParams,
    pub garch_y: GarchParams,
    pub h0: f64,
    pub prior_spread: PriorSpread,
    #[serde(default)]
    pub resampler: Resampler,
    #[serde(default = "default_ess_fraction")]
    pub ess_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PfSettings {
    pub n_s: usize,
    /// Fixed acceleration-noise variance.
    pub variance: f64,
    #[serde(default)]
    pub mu: f64,
    pub prior_spread: PriorSpread,
    #[serde(default)]
    pub resampler: Resampler,
    #[serde(default = "default_ess_fraction")]
    pub ess_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImmSettings {
    pub sigma_cv: f64,
    pub sigma_ca: f64,
    pub p_ij: [[f64; 2]; 2],
    #[serde(default = "default_init_probs")]
    pub init_probs: [f64; 2],
    #[serde(default = "default_init_acc_var")]
    pub init_acc_var: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    PfGarch,
    Pf,
    Imm,
}

impl FilterKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::PfGarch => "pf_garch",
            Self::Pf => "pf",
            Self::Imm => "imm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterSpec {
    PfGarch(PfGarchSettings),
    Pf(PfSettings),
    Imm(ImmSettings),
}

impl FilterSpec {
    pub fn kind(&self) -> FilterKind {
        match self {
            Self::PfGarch(_) => FilterKind::PfGarch,
            Self::Pf(_) => FilterKind::Pf,
            Self::Imm(_) => FilterKind::Imm,
        }
    }

    pub fn n_s(&self) -> Option<usize> {
        match self {
            Self::PfGarch(s) => Some(s.n_s),
            Self::Pf(s) => Some(s.n_s),
            Self::Imm(_) => None,
        }
    }

    /// Copy with the particle count replaced; `None` for the IMM.
    pub fn with_n_s(&self, n_s: usize) -> Option<Self> {
        let mut out = self.clone();
        match &mut out {
            Self::PfGarch(s) => s.n_s = n_s,
            Self::Pf(s) => s.n_s = n_s,
            Self::Imm(_) => return None,
        }
        Some(out)
    }
}

/// Build a tracker for sample period `t`, initialised on `y0`.
pub fn build_tracker(
    spec: &FilterSpec,
    t: f64,
    meas: MeasurementModel,
    seed: u64,
    y0: &Measurement,
) -> Result<Box<dyn Tracker>> {
    Ok(match spec {
        FilterSpec::PfGarch(s) => {
            let cfg = PfGarchConfig {
                n_s: s.n_s,
                garch_x: s.garch_x,
                garch_y: s.garch_y,
                trans: TransitionModel::new(t, s.mu)?,
                meas,
                prior_spread: s.prior_spread,
                h0: s.h0,
                resampler: s.resampler,
                ess_fraction: s.ess_fraction,
                seed,
            };
            Box::new(ParticleFilter::garch(&cfg, y0)?)
        }
        FilterSpec::Pf(s) => {
            let cfg = PfPlainConfig {
                n_s: s.n_s,
                variance: s.variance,
                trans: TransitionModel::new(t, s.mu)?,
                meas,
                prior_spread: s.prior_spread,
                resampler: s.resampler,
                ess_fraction: s.ess_fraction,
                seed,
            };
            Box::new(ParticleFilter::plain(&cfg, y0)?)
        }
        FilterSpec::Imm(s) => {
            let cfg = ImmConfig {
                p_ij: s.p_ij,
                sigma_cv: s.sigma_cv,
                sigma_ca: s.sigma_ca,
                meas,
                t,
                init_probs: s.init_probs,
                init_acc_var: s.init_acc_var,
            };
            Box::new(ImmFilter::new(&cfg, y0)?)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tagged_json_round_trip() {
        let json = r#"{"kind":"imm","sigma_cv":2.0,"sigma_ca":20.0,"p_ij":[[0.99,0.01],[0.01,0.99]]}"#;
        let spec: FilterSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.kind(), FilterKind::Imm);
        let back: FilterSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn unknown_field_is_rejected() {
        let json = r#"{"kind":"pf","n_s":10,"variance":1.0,"prior_spread":{"pos":1,"vel":1,"acc":1},"sigma":3}"#;
        let err = serde_json::from_str::<FilterSpec>(json).unwrap_err().to_string();
        assert!(err.contains("sigma"), "{err}");
    }
}
