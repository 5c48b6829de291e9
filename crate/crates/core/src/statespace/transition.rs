use nalgebra::{Matrix3, Matrix6, Matrix6x2, Vector6};

use super::{state_index, KinematicState};
use crate::error::{ensure, Result};

const SERIES_TERMS: usize = 40;

/// `exp(-mu t)`.
#[inline]
pub fn decay(t: f64, mu: f64) -> f64 {
    (-mu * t).exp()
}

/// Velocity-from-acceleration coefficient `(1 - exp(-mu t)) / mu`, with the
/// `mu -> 0` limit `t`.
pub fn phi2(t: f64, mu: f64) -> f64 {
    let x = mu * t;
    if x == 0.0 {
        t
    } else {
        -(-x).exp_m1() / mu
    }
}

/// Position-from-acceleration coefficient `(exp(-mu t) + mu t - 1) / mu^2`,
/// with the `mu -> 0` limit `t^2 / 2`.
pub fn phi1(t: f64, mu: f64) -> f64 {
    let x = mu * t;
    if x < 1.0 {
        // sum_{n>=0} (-x)^n / (n+2)!
        let mut term = 0.5;
        let mut sum = 0.0;
        for n in 0..SERIES_TERMS {
            sum += term;
            term *= -x / (n as f64 + 3.0);
        }
        t * t * sum
    } else {
        ((-x).exp_m1() + x) / (mu * mu)
    }
}

/// Exact discretisation of the Singer-type dynamics over one sampling
/// interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel {
    pub t: f64,
    pub mu: f64,
    pub phi: Matrix6<f64>,
    axis: Matrix3<f64>,
}

impl TransitionModel {
    pub fn new(t: f64, mu: f64) -> Result<Self> {
        ensure(t > 0.0 && t.is_finite(), || format!("sampling interval must be > 0, got {t}"))?;
        ensure(mu >= 0.0 && mu.is_finite(), || format!("mu must be >= 0, got {mu}"))?;
        #[rustfmt::skip]
        let axis = Matrix3::new(
            1.0, t,   phi1(t, mu),
            0.0, 1.0, phi2(t, mu),
            0.0, 0.0, decay(t, mu),
        );
        let mut phi = Matrix6::zeros();
        for ax in 0..2 {
            for r in 0..3 {
                for c in 0..3 {
                    phi[(state_index(ax, r), state_index(ax, c))] = axis[(r, c)];
                }
            }
        }
        Ok(Self { t, mu, phi, axis })
    }

    /// Per-axis 3x3 block `[[1, T, phi1], [0, 1, phi2], [0, 0, exp(-mu T)]]`.
    pub fn axis_block(&self) -> &Matrix3<f64> {
        &self.axis
    }

    /// Noise-injection matrix: the acceleration rows.
    pub fn noise_input(&self) -> Matrix6x2<f64> {
        let mut g = Matrix6x2::zeros();
        g[(state_index(0, 2), 0)] = 1.0;
        g[(state_index(1, 2), 1)] = 1.0;
        g
    }

    /// `X(k+1) = Phi X(k) + U(k)`.
    pub fn propagate(&self, state: &KinematicState, noise: &Vector6<f64>) -> KinematicState {
        KinematicState::from_vector(&(self.phi * state.to_vector() + noise))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_acceleration_limit() {
        let m = TransitionModel::new(1.0, 0.0).unwrap();
        let b = m.axis_block();
        assert_eq!(b[(0, 2)], 0.5);
        assert_eq!(b[(1, 2)], 1.0);
        assert_eq!(b[(2, 2)], 1.0);
        assert!((phi1(1.0, 1e-8) - 0.5).abs() < 1e-6);
        assert!((phi2(1.0, 1e-8) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn closed_form_values() {
        assert_relative_eq!(phi2(1.0, 1.0), 1.0 - (-1.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(phi2(1.0, 1.0), 0.6321, epsilon = 1e-4);
        // Both branches of phi1 agree near the switch point.
        let below = phi1(1.0, 1.0 - 1e-12);
        let above = phi1(1.0, 1.0);
        assert_relative_eq!(below, above, epsilon = 1e-11);
        assert_relative_eq!(phi1(2.0, 3.0), ((-6.0f64).exp() + 6.0 - 1.0) / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn semigroup_property() {
        for &(t1, t2, mu) in &[(0.05, 0.05, 1.0), (0.3, 0.7, 0.1), (1.0, 1.0, 20.0), (0.5, 0.25, 0.0)] {
            let a = TransitionModel::new(t1, mu).unwrap();
            let b = TransitionModel::new(t2, mu).unwrap();
            let ab = TransitionModel::new(t1 + t2, mu).unwrap();
            let diff = (a.phi * b.phi - ab.phi).abs().max();
            assert!(diff < 1e-12, "t1={t1} t2={t2} mu={mu} diff={diff}");
        }
    }

    #[test]
    fn propagate_examples() {
        let m = TransitionModel::new(1.0, 0.0).unwrap();
        let zero = Vector6::zeros();
        assert_eq!(m.propagate(&KinematicState::default(), &zero), KinematicState::default());

        let s = KinematicState::new(0.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        assert_eq!(m.propagate(&s, &zero), KinematicState::new(0.5, 0.0, 1.0, 0.0, 1.0, 0.0));

        let m = TransitionModel::new(50.0, 1.0).unwrap();
        let out = m.propagate(&s, &zero);
        assert!(out.ax.abs() < 1e-20);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(TransitionModel::new(0.0, 1.0).is_err());
        assert!(TransitionModel::new(1.0, -1.0).is_err());
    }

    #[test]
    fn noise_input_selects_acceleration_rows() {
        let g = TransitionModel::new(1.0, 0.5).unwrap().noise_input();
        assert_eq!(g[(4, 0)], 1.0);
        assert_eq!(g[(5, 1)], 1.0);
        assert_eq!(g.sum(), 2.0);
    }
}
