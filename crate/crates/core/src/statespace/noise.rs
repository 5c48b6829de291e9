//! Process-noise covariance of the volatility-scaled Singer dynamics.
//!
//! With the volatility held at `h` over one sampling interval, the per-axis
//! noise is `U = sqrt(h) * int_0^T gamma(tau) dW`, `gamma(tau) = [phi1(tau),
//! phi2(tau), exp(-mu tau)]`, so `Q_axis(h) = h * int_0^T gamma gamma^T dtau`.
//! The unit integral is evaluated either in closed form or by Gauss-Legendre
//! quadrature; the two routes are kept independent so each checks the other.

use nalgebra::{Matrix3, Matrix6, SymmetricEigen, Vector3, Vector6};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{decay, phi1, phi2, state_index, TransitionModel, VolatilityPair};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceMethod {
    ClosedForm,
    Quadrature(usize),
}

/// Draw from `N(0, Q)` plus the acceleration components used as the GARCH
/// innovation `z(k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessNoiseSample {
    pub noise: Vector6<f64>,
    pub z_accel: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessNoiseModel {
    pub trans: TransitionModel,
    pub method: CovarianceMethod,
    unit: Matrix3<f64>,
    factor: Matrix3<f64>,
}

impl ProcessNoiseModel {
    pub fn new(trans: TransitionModel, method: CovarianceMethod) -> Result<Self> {
        let unit = match method {
            CovarianceMethod::ClosedForm => unit_axis_closed_form(trans.t, trans.mu),
            CovarianceMethod::Quadrature(n) => unit_axis_quadrature(trans.t, trans.mu, n)?,
        };
        let factor = psd_factor(&unit)?;
        Ok(Self { trans, method, unit, factor })
    }

    /// `int_0^T gamma gamma^T dtau` for unit volatility.
    pub fn unit_axis(&self) -> &Matrix3<f64> {
        &self.unit
    }

    /// Per-axis covariance `h * unit`; `h = 0` gives the zero matrix.
    pub fn axis_covariance(&self, h: f64) -> Matrix3<f64> {
        self.unit * h
    }

    /// Full 6x6 `Q(k)` for the volatility held over the interval.
    pub fn covariance(&self, vol: &VolatilityPair) -> Matrix6<f64> {
        self.covariance_raw(vol.hx, vol.hy)
    }

    pub fn covariance_raw(&self, hx: f64, hy: f64) -> Matrix6<f64> {
        let mut q = Matrix6::zeros();
        for (axis, h) in [(0, hx), (1, hy)] {
            for r in 0..3 {
                for c in 0..3 {
                    q[(state_index(axis, r), state_index(axis, c))] = h * self.unit[(r, c)];
                }
            }
        }
        q
    }

    /// Draw `U ~ N(0, Q(vol))`. Consumes exactly six standard normals, x axis
    /// first.
    pub fn sample<R: Rng + ?Sized>(&self, vol: &VolatilityPair, rng: &mut R) -> ProcessNoiseSample {
        let mut noise = Vector6::zeros();
        for (axis, h) in [(0, vol.hx), (1, vol.hy)] {
            let eps = Vector3::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            );
            let u = (self.factor * eps) * h.sqrt();
            for order in 0..3 {
                noise[state_index(axis, order)] = u[order];
            }
        }
        ProcessNoiseSample { noise, z_accel: [noise[state_index(0, 2)], noise[state_index(1, 2)]] }
    }
}

/// Factor `L` with `L L^T = m`: Cholesky, or an eigenvalue-clamped square root
/// when `m` is only positive semidefinite up to rounding.
fn psd_factor(m: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    if let Some(ch) = m.cholesky() {
        return Ok(ch.l());
    }
    let eig = SymmetricEigen::new(*m);
    let trace = m.trace();
    if eig.eigenvalues.iter().any(|&l| l < -1e-9 * trace.abs()) {
        return Err(Error::Factorization(format!(
            "process-noise covariance is indefinite: eigenvalues {:?}",
            eig.eigenvalues.as_slice()
        )));
    }
    log::warn!(
        "process-noise covariance is not numerically positive definite; clamping eigenvalues {:?} at 0",
        eig.eigenvalues.as_slice()
    );
    let sqrt = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let factor = eig.eigenvectors * Matrix3::from_diagonal(&sqrt);
    if factor.iter().any(|v| !v.is_finite()) || sqrt.iter().all(|&s| s == 0.0) {
        return Err(Error::Factorization("degenerate process-noise covariance".into()));
    }
    Ok(factor)
}

const SERIES_SWITCH: f64 = 2.0;
const SERIES_TERMS: usize = 48;

/// Closed-form unit-volatility per-axis covariance.
///
/// For `mu T < 2` the entries are summed from their Taylor expansions in
/// `mu T` (the exponential forms cancel catastrophically there); otherwise the
/// exact exponential expressions are used.
pub fn unit_axis_closed_form(t: f64, mu: f64) -> Matrix3<f64> {
    let x = mu * t;
    let (q11, q12, q13, q22, q23, q33) = if x < SERIES_SWITCH {
        unit_axis_series(x)
    } else {
        unit_axis_exponential(x)
    };
    let (t2, t3) = (t * t, t * t * t);
    let (t4, t5) = (t3 * t, t3 * t2);
    #[rustfmt::skip]
    let q = Matrix3::new(
        t5 * q11, t4 * q12, t3 * q13,
        t4 * q12, t3 * q22, t2 * q23,
        t3 * q13, t2 * q23, t  * q33,
    );
    q
}

/// Dimensionless entries, `tau = u T`: gamma components are
/// `T^2 sum (-x)^(m-2) u^m / m!`, `T sum (-x)^(m-1) u^m / m!` and
/// `sum (-x)^m u^m / m!`; products are integrated term by term over `[0, 1]`.
fn unit_axis_series(x: f64) -> (f64, f64, f64, f64, f64, f64) {
    let n = SERIES_TERMS;
    let mut c1 = vec![0.0; n];
    let mut c2 = vec![0.0; n];
    let mut c3 = vec![0.0; n];
    let mut fact = 1.0;
    let mut pow = 1.0; // (-x)^m
    for m in 0..n {
        if m > 0 {
            fact *= m as f64;
        }
        c3[m] = pow / fact;
        pow *= -x;
    }
    let mut fact = 1.0;
    let mut pow = 1.0;
    for m in 1..n {
        fact *= m as f64;
        c2[m] = pow / fact;
        pow *= -x;
    }
    let mut fact = 2.0;
    let mut pow = 1.0;
    for m in 2..n {
        if m > 2 {
            fact *= m as f64;
        }
        c1[m] = pow / fact;
        pow *= -x;
    }
    let integrate = |a: &[f64], b: &[f64]| -> f64 {
        let mut total = 0.0;
        for p in (0..2 * n - 1).rev() {
            let lo = p.saturating_sub(n - 1);
            let hi = p.min(n - 1);
            let coef: f64 = (lo..=hi).map(|i| a[i] * b[p - i]).sum();
            total += coef / (p + 1) as f64;
        }
        total
    };
    (
        integrate(&c1, &c1),
        integrate(&c1, &c2),
        integrate(&c1, &c3),
        integrate(&c2, &c2),
        integrate(&c2, &c3),
        integrate(&c3, &c3),
    )
}

fn unit_axis_exponential(x: f64) -> (f64, f64, f64, f64, f64, f64) {
    let e1 = (-x).exp();
    let e2 = (-2.0 * x).exp();
    let a = (1.0 - e2) / (2.0 * x); // int exp(-2 x u) du
    let b = (1.0 - e1) / x; // int exp(-x u) du
    let c = (1.0 - e1 * (1.0 + x)) / (x * x); // int u exp(-x u) du
    let q33 = a;
    let q23 = (b - a) / x;
    let q22 = (1.0 - 2.0 * b + a) / (x * x);
    let q13 = (a + x * c - b) / (x * x);
    let q12 = (2.0 * b - a + x / 2.0 - x * c - 1.0) / (x * x * x);
    let q11 = (a + x * x / 3.0 + 1.0 + 2.0 * x * c - 2.0 * b - x) / (x * x * x * x);
    (q11, q12, q13, q22, q23, q33)
}

/// Unit-volatility per-axis covariance by `n`-node Gauss-Legendre quadrature
/// of `gamma gamma^T` over `[0, T]`.
pub fn unit_axis_quadrature(t: f64, mu: f64, n_nodes: usize) -> Result<Matrix3<f64>> {
    if n_nodes < 2 {
        return Err(Error::InvalidParameter(format!(
            "quadrature needs at least 2 nodes, got {n_nodes}"
        )));
    }
    let (nodes, weights) = gauss_legendre(n_nodes);
    let mut q = Matrix3::zeros();
    for (xi, wi) in nodes.iter().zip(&weights) {
        let tau = 0.5 * t * (xi + 1.0);
        let g = Vector3::new(phi1(tau, mu), phi2(tau, mu), decay(tau, mu));
        q += g * g.transpose() * (0.5 * t * wi);
    }
    Ok(q)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Newton iteration on the
/// Legendre polynomial).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
