//! AR(1)-GARCH(1,1) acceleration volatility.
//!
//! The variance recursion uses the tracking convention
//!
//! ```text
//! h(k) = alpha0 + alpha1 * h(k-1) + beta1 * z(k-1)^2,   z(k) = sqrt(h(k)) * eps(k)
//! ```
//!
//! i.e. `alpha1` weighs the previous conditional variance and `beta1` the
//! previous squared innovation.

use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::rng::rng_from_seed;

/// GARCH(1,1) coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGarchParams")]
pub struct GarchParams {
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta1: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGarchParams {
    alpha0: f64,
    alpha1: f64,
    beta1: f64,
}

impl TryFrom<RawGarchParams> for GarchParams {
    type Error = Error;

    fn try_from(raw: RawGarchParams) -> Result<Self> {
        GarchParams::new(raw.alpha0, raw.alpha1, raw.beta1)
    }
}

impl GarchParams {
    pub fn new(alpha0: f64, alpha1: f64, beta1: f64) -> Result<Self> {
        ensure(alpha0.is_finite() && alpha0 > 0.0, || {
            format!("alpha0 must be finite and > 0, got {alpha0}")
        })?;
        ensure(alpha1.is_finite() && alpha1 >= 0.0, || {
            format!("alpha1 must be finite and >= 0, got {alpha1}")
        })?;
        ensure(beta1.is_finite() && beta1 >= 0.0, || {
            format!("beta1 must be finite and >= 0, got {beta1}")
        })?;
        Ok(Self { alpha0, alpha1, beta1 })
    }

    /// Constant-variance parameters: `h(k) = variance` for every `k`.
    pub fn constant(variance: f64) -> Result<Self> {
        Self::new(variance, 0.0, 0.0)
    }

    pub fn persistence(&self) -> f64 {
        self.alpha1 + self.beta1
    }

    /// Wide-sense stationarity: `alpha1 + beta1 <= 1`.
    pub fn is_stationary(&self) -> bool {
        self.persistence() <= 1.0
    }

    pub fn on_stationarity_boundary(&self) -> bool {
        self.persistence() == 1.0
    }

    /// `alpha0 / (1 - alpha1 - beta1)`, defined only strictly inside the
    /// stationary region.
    pub fn unconditional_variance(&self) -> Option<f64> {
        let p = self.persistence();
        (p < 1.0).then(|| self.alpha0 / (1.0 - p))
    }

    /// Warm-start variance for a fresh recursion.
    pub fn initial_variance(&self) -> f64 {
        self.unconditional_variance().unwrap_or(self.alpha0)
    }

    /// One step of the recursion without input validation.
    #[inline]
    pub fn next_variance(&self, h_prev: f64, z_prev: f64) -> f64 {
        self.alpha0 + self.alpha1 * h_prev + self.beta1 * z_prev * z_prev
    }
}

/// Continuous-time volatility SDE `dh = theta (omega - h) dt + xi h dB`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeVolParams {
    pub theta: f64,
    pub omega: f64,
    pub xi: f64,
    /// Correlation between `dB` and the acceleration Brownian motion. Carried
    /// for completeness; the discrete recursion couples the two noises through
    /// `z(k-1)` instead.
    pub rho: f64,
}

impl SdeVolParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.theta > 0.0, || format!("theta must be > 0, got {}", self.theta))?;
        ensure(self.omega > 0.0, || format!("omega must be > 0, got {}", self.omega))?;
        ensure(self.xi >= 0.0, || format!("xi must be >= 0, got {}", self.xi))?;
        ensure((-1.0..=1.0).contains(&self.rho), || {
            format!("rho must lie in [-1, 1], got {}", self.rho)
        })
    }
}

/// Forward-Euler mapping of the volatility SDE onto GARCH coefficients over
/// `segments` sub-steps of a sampling interval `t`.
///
/// `beta1` receives the squared Euler diffusion coefficient `xi^2 t/M`, which
/// is the scale on which `z^2` enters the recursion.
pub fn sde_to_garch(sde: &SdeVolParams, t: f64, segments: u32) -> Result<GarchParams> {
    ensure(t > 0.0 && t.is_finite(), || format!("sampling interval must be > 0, got {t}"))?;
    ensure(segments >= 1, || "segment count must be >= 1".to_string())?;
    let dt = t / f64::from(segments);
    ensure(sde.theta * dt <= 1.0, || {
        format!("theta * T/M = {} exceeds 1; Euler step is unstable", sde.theta * dt)
    })?;
    GarchParams::new(sde.theta * sde.omega * dt, 1.0 - sde.theta * dt, sde.xi * sde.xi * dt)
}

/// Checked GARCH variance update.
pub fn garch_step(params: &GarchParams, h_prev: f64, z_prev: f64) -> Result<f64> {
    if !h_prev.is_finite() || !z_prev.is_finite() {
        return Err(Error::Domain(format!(
            "non-finite GARCH input (h_prev = {h_prev}, z_prev = {z_prev})"
        )));
    }
    if h_prev <= 0.0 {
        return Err(Error::Domain(format!("h_prev must be > 0, got {h_prev}")));
    }
    Ok(params.next_variance(h_prev, z_prev))
}

/// A simulated AR-GARCH path.
#[derive(Debug, Clone, PartialEq)]
pub struct ArGarchSeries {
    pub a: Vec<f64>,
    pub h: Vec<f64>,
    pub z: Vec<f64>,
    pub b: Vec<f64>,
    pub seed: u64,
}

/// Simulate `a(k) = b a(k-1) + z(k)` with GARCH(1,1) `z` and Gaussian `eps`.
///
/// Rejects nonstationary parameters; see [`simulate_ar_garch_with`] to opt
/// out.
pub fn simulate_ar_garch(
    params: &GarchParams,
    ar_coeffs: &[f64],
    n: usize,
    seed: u64,
) -> Result<ArGarchSeries> {
    simulate_ar_garch_with(params, ar_coeffs, n, seed, false)
}

pub fn simulate_ar_garch_with(
    params: &GarchParams,
    ar_coeffs: &[f64],
    n: usize,
    seed: u64,
    allow_nonstationary: bool,
) -> Result<ArGarchSeries> {
    simulate_with_innovations(params, ar_coeffs, n, seed, allow_nonstationary, |rng| {
        StandardNormal.sample(rng)
    })
}

pub(crate) fn simulate_with_innovations<F>(
    params: &GarchParams,
    ar_coeffs: &[f64],
    n: usize,
    seed: u64,
    allow_nonstationary: bool,
    mut innovation: F,
) -> Result<ArGarchSeries>
where
    F: FnMut(&mut crate::rng::SimRng) -> f64,
{
    if !allow_nonstationary && !params.is_stationary() {
        return Err(Error::Nonstationary(params.persistence()));
    }
    ensure(ar_coeffs.len() <= 1, || {
        format!("AR order is fixed at 1, got {} coefficients", ar_coeffs.len())
    })?;
    let b = ar_coeffs.first().copied().unwrap_or(0.0);

    let mut rng = rng_from_seed(seed);
    let mut a = Vec::with_capacity(n);
    let mut h = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);

    let mut h_k = params.initial_variance();
    let mut a_prev = 0.0;
    for k in 0..n {
        if k > 0 {
            h_k = params.next_variance(h_k, z[k - 1]);
        }
        let z_k = h_k.sqrt() * innovation(&mut rng);
        let a_k = b * a_prev + z_k;
        h.push(h_k);
        z.push(z_k);
        a.push(a_k);
        a_prev = a_k;
    }
    Ok(ArGarchSeries { a, h, z, b: ar_coeffs.to_vec(), seed })
}

/// Excess kurtosis of the GARCH(1,1) innovation `z`.
///
/// With `beta1` the coefficient on `z^2` and `alpha1` the coefficient on `h`,
/// `6 beta1^2 / (1 - alpha1^2 - 2 alpha1 beta1 - 3 beta1^2)`.
pub fn excess_kurtosis(params: &GarchParams) -> Result<f64> {
    let (arch, garch) = (params.beta1, params.alpha1);
    let denom = 1.0 - garch * garch - 2.0 * arch * garch - 3.0 * arch * arch;
    if denom <= 0.0 {
        return Err(Error::NoFourthMoment(denom));
    }
    Ok(6.0 * arch * arch / denom)
}

/// Sample excess kurtosis `m4 / m2^2 - 3` about the sample mean.
pub fn sample_excess_kurtosis(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (m2, m4) = xs.iter().fold((0.0, 0.0), |(m2, m4), &x| {
        let d2 = (x - mean) * (x - mean);
        (m2 + d2, m4 + d2 * d2)
    });
    let (m2, m4) = (m2 / n, m4 / n);
    m4 / (m2 * m2) - 3.0
}

/// Monte Carlo set-up for the stochastic-AR-coefficient acceleration model
/// `a(k) = zeta(k) a(k-1) + w(k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeteroscedasticityExperiment {
    /// Standard deviation of `zeta(k)`.
    pub sigma_zeta: f64,
    /// Standard deviation of `w(k)`.
    pub sigma_m: f64,
    /// Mean of `zeta(k)`, i.e. `exp(-mu T)`.
    pub zeta_mean: f64,
    pub n_samples: usize,
    /// Bin edges over `a(k-1)^2`. Empty selects 20 equal-count bins.
    pub conditioning_bins: Vec<f64>,
}

impl HeteroscedasticityExperiment {
    pub fn new(sigma_zeta: f64, sigma_m: f64, zeta_mean: f64, n_samples: usize) -> Self {
        Self { sigma_zeta, sigma_m, zeta_mean, n_samples, conditioning_bins: Vec::new() }
    }

    fn validate(&self) -> Result<()> {
        ensure(self.sigma_zeta >= 0.0, || "sigma_zeta must be >= 0".into())?;
        ensure(self.sigma_m > 0.0, || "sigma_m must be > 0".into())?;
        ensure(self.n_samples >= 10_000, || {
            format!("n_samples must be >= 10^4, got {}", self.n_samples)
        })?;
        let second_moment = self.zeta_mean.powi(2) + self.sigma_zeta.powi(2);
        ensure(second_moment < 1.0, || {
            format!("E[zeta^2] = {second_moment} >= 1: acceleration process is not stationary")
        })?;
        ensure(self.conditioning_bins.windows(2).all(|w| w[0] < w[1]), || {
            "conditioning bin edges must be strictly increasing".into()
        })
    }
}

/// Result of the conditional-variance regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeteroscedasticityFit {
    /// Estimate of `sigma_zeta^2`.
    pub slope: f64,
    /// Estimate of `sigma_m^2`.
    pub intercept: f64,
    pub bins_used: usize,
}

const MIN_BIN_COUNT: usize = 30;
const DEFAULT_BIN_COUNT: usize = 20;
const BURN_IN: usize = 1_000;

/// Estimate `Var{a(k) | a(k-1)} = sigma_zeta^2 a(k-1)^2 + sigma_m^2` by
/// binning on `a(k-1)^2` and regressing within-bin conditional variances.
pub fn heteroscedasticity_oracle(
    exp: &HeteroscedasticityExperiment,
    seed: u64,
) -> Result<HeteroscedasticityFit> {
    exp.validate()?;
    let mut rng = rng_from_seed(seed);
    let zeta = Normal::new(exp.zeta_mean, exp.sigma_zeta)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let noise = Normal::new(0.0, exp.sigma_m).map_err(|e| Error::InvalidParameter(e.to_string()))?;

    let total = exp.n_samples + BURN_IN;
    let mut a = Vec::with_capacity(total + 1);
    a.push(0.0);
    for _ in 0..total {
        let prev = *a.last().unwrap();
        a.push(zeta.sample(&mut rng) * prev + noise.sample(&mut rng));
    }
    let pairs = &a[BURN_IN..];

    // Conditional mean E{a(k)|a(k-1)} = E{zeta} a(k-1); fit the coefficient.
    let (sxy, sxx) = pairs
        .windows(2)
        .fold((0.0, 0.0), |(sxy, sxx), w| (sxy + w[0] * w[1], sxx + w[0] * w[0]));
    let m_hat = sxy / sxx;

    let mut samples: Vec<(f64, f64)> = pairs
        .windows(2)
        .map(|w| {
            let r = w[1] - m_hat * w[0];
            (w[0] * w[0], r * r)
        })
        .collect();
    samples.sort_by(|p, q| p.0.total_cmp(&q.0));

    let bins: Vec<&[(f64, f64)]> = if exp.conditioning_bins.is_empty() {
        let per_bin = samples.len().div_ceil(DEFAULT_BIN_COUNT);
        samples.chunks(per_bin).collect()
    } else {
        let edges = &exp.conditioning_bins;
        edges
            .windows(2)
            .map(|w| {
                let lo = samples.partition_point(|s| s.0 < w[0]);
                let hi = samples.partition_point(|s| s.0 < w[1]);
                &samples[lo..hi]
            })
            .collect()
    };

    // Weighted least squares on bin means, weight = 1 / Var(bin mean of r^2).
    let mut points = Vec::new();
    for bin in bins.iter().filter(|b| b.len() >= MIN_BIN_COUNT) {
        let n = bin.len() as f64;
        let u = bin.iter().map(|s| s.0).sum::<f64>() / n;
        let s = bin.iter().map(|s| s.1).sum::<f64>() / n;
        let var = bin.iter().map(|p| (p.1 - s).powi(2)).sum::<f64>() / (n - 1.0);
        if var > 0.0 {
            points.push((u, s, n / var));
        }
    }
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} conditioning bins hold >= {MIN_BIN_COUNT} samples",
            points.len()
        )));
    }
    let (slope, intercept) = weighted_line_fit(&points);
    Ok(HeteroscedasticityFit { slope, intercept, bins_used: points.len() })
}

fn weighted_line_fit(points: &[(f64, f64, f64)]) -> (f64, f64) {
    let sw: f64 = points.iter().map(|p| p.2).sum();
    let xm = points.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let ym = points.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxy: f64 = points.iter().map(|p| p.2 * (p.0 - xm) * (p.1 - ym)).sum();
    let sxx: f64 = points.iter().map(|p| p.2 * (p.0 - xm) * (p.0 - xm)).sum();
    let slope = sxy / sxx;
    (slope, ym - slope * xm)
}

/// Draw a Student-t-like heavy-tailed innovation for pluggable-innovation
/// tests: a scaled t(5), normalised to unit variance.
#[cfg(test)]
fn unit_variance_t5<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    let t: f64 = rand_distr::StudentT::new(5.0).unwrap().sample(rng);
    t / (5.0f64 / 3.0).sqrt()
}
