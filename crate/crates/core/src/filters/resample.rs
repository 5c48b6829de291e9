use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Ensemble;

/// Resampling scheme for the bootstrap step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resampler {
    /// Independent draws from the weight distribution.
    #[default]
    Multinomial,
    /// One uniform offset, `n` evenly spaced pointers.
    Systematic,
}

/// Ancestor indices for `n` offspring of the (normalised) `weights`.
pub fn resample_indices<R: Rng + ?Sized>(weights: &[f64], n: usize, scheme: Resampler, rng: &mut R) -> Vec<usize> {
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cdf.push(acc);
    }
    let total = acc;
    let last = weights.len() - 1;
    let locate = |u: f64| cdf.partition_point(|&c| c <= u).min(last);
    match scheme {
        Resampler::Multinomial => (0..n).map(|_| locate(rng.random::<f64>() * total)).collect(),
        Resampler::Systematic => {
            let step = total / n as f64;
            let offset = rng.random::<f64>() * step;
            let mut out = Vec::with_capacity(n);
            let mut j = 0;
            for i in 0..n {
                let u = offset + i as f64 * step;
                while j < last && cdf[j] <= u {
                    j += 1;
                }
                out.push(j);
            }
            out
        }
    }
}

/// Draw `n_s` offspring proportionally to weight; the result carries uniform
/// weights.
pub fn resample<R: Rng + ?Sized>(ens: &Ensemble, scheme: Resampler, rng: &mut R) -> Ensemble {
    let n = ens.n_s();
    let weights = ens.weights();
    let w = 1.0 / n as f64;
    let particles = resample_indices(&weights, n, scheme, rng)
        .into_iter()
        .map(|i| {
            let mut p = ens.particles[i];
            p.weight = w;
            p
        })
        .collect();
    Ensemble { particles, degeneracy_events: ens.degeneracy_events }
}
