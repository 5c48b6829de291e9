//! Ground-truth trajectories and measurement sequences for the four test
//! cases.
//!
//! Sample `k = 0` is the initial state at `t = 0`; records cover
//! `k = 1..=n_steps`. The acceleration commanded at sample `k` drives the
//! exact constant-acceleration step from `k` to `k + 1`.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::rng::{stream_rng, TRUTH_STREAM};
use crate::statespace::{KinematicState, Measurement, MeasurementModel};

/// A constant acceleration command over samples `start..=end` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub ax: f64,
    pub ay: f64,
}

impl Segment {
    pub fn contains(&self, k: usize) -> bool {
        (self.start..=self.end).contains(&k)
    }
}

/// How the truth acceleration evolves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum AccelProfile {
    /// Zero acceleration except on the listed segments (later segments win
    /// where they overlap).
    Piecewise { segments: Vec<Segment> },
    /// `a(k+1) = exp(-decay·T)·a(k) + scale·t(k)` with iid Student-t `t(k)`;
    /// `decay = 0` is a pure random walk.
    StudentT { dof: f64, scale: f64, decay: f64 },
    /// `ax = A sin(2πt/P)`, `ay = A cos(2πt/P)` except on
    /// `[hold_start, hold_end)` seconds, where the acceleration is held at
    /// `hold`.
    Sinusoid { amplitude: f64, period: f64, hold_start: f64, hold_end: f64, hold: [f64; 2] },
}

impl AccelProfile {
    /// Deterministic acceleration at sample `k` (time `t`); `None` for
    /// stochastic laws.
    pub fn command(&self, k: usize, t: f64) -> Option<[f64; 2]> {
        match self {
            Self::Piecewise { segments } => Some(
                segments.iter().rfind(|s| s.contains(k)).map_or([0.0, 0.0], |s| [s.ax, s.ay]),
            ),
            Self::StudentT { .. } => None,
            Self::Sinusoid { amplitude, period, hold_start, hold_end, hold } => {
                if (*hold_start..*hold_end).contains(&t) {
                    Some(*hold)
                } else {
                    let w = 2.0 * std::f64::consts::PI * t / period;
                    Some([amplitude * w.sin(), amplitude * w.cos()])
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::Piecewise { segments } => {
                for s in segments {
                    ensure(s.start >= 1 && s.start <= s.end, || format!("bad segment bounds {s:?}"))?;
                    ensure(s.ax.is_finite() && s.ay.is_finite(), || format!("segment acceleration not finite: {s:?}"))?;
                }
                Ok(())
            }
            Self::StudentT { dof, scale, decay } => {
                ensure(*dof > 0.0 && dof.is_finite(), || format!("dof must be > 0, got {dof}"))?;
                ensure(*scale >= 0.0 && scale.is_finite(), || format!("scale must be >= 0, got {scale}"))?;
                ensure(*decay >= 0.0 && decay.is_finite(), || format!("decay must be >= 0, got {decay}"))
            }
            Self::Sinusoid { amplitude, period, hold_start, hold_end, hold } => {
                ensure(amplitude.is_finite() && *period > 0.0 && period.is_finite(), || {
                    format!("sinusoid needs finite amplitude and period > 0, got A={amplitude}, P={period}")
                })?;
                ensure(hold_start <= hold_end, || format!("hold interval [{hold_start}, {hold_end}) is reversed"))?;
                ensure(hold.iter().all(|v| v.is_finite()), || format!("hold acceleration not finite: {hold:?}"))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Sample period (s).
    pub t: f64,
    pub n_steps: usize,
    pub x0: KinematicState,
    /// Standard deviations of a Gaussian initial-state law centred on `x0`;
    /// `None` starts every run from `x0` exactly.
    #[serde(default)]
    pub x0_std: Option<[f64; 6]>,
    pub accel: AccelProfile,
    pub meas: MeasurementModel,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        ensure(self.t > 0.0 && self.t.is_finite(), || format!("sample period must be > 0, got {}", self.t))?;
        ensure(self.n_steps >= 1, || "n_steps must be >= 1".to_string())?;
        ensure(self.x0.is_finite(), || format!("x0 not finite: {:?}", self.x0))?;
        if let Some(sd) = &self.x0_std {
            ensure(sd.iter().all(|s| *s >= 0.0 && s.is_finite()), || format!("x0_std must be >= 0, got {sd:?}"))?;
        }
        self.accel.validate()
    }

    /// Look a default scenario up by its identifier (`1a`, `1b`, `2`, `3`).
    pub fn by_id(id: &str) -> Result<Self> {
        match id {
            "1a" => Ok(scenario_1a()),
            "1b" => Ok(scenario_1b()),
            "2" => Ok(scenario_2()),
            "3" => Ok(scenario_3()),
            other => Err(Error::InvalidParameter(format!("unknown scenario id {other:?} (expected 1a, 1b, 2 or 3)"))),
        }
    }
}

pub const SCENARIO_IDS: [&str; 4] = ["1a", "1b", "2", "3"];

fn manoeuvre(name: &str, uy: f64, ux: f64) -> Scenario {
    Scenario {
        name: name.to_string(),
        t: 0.05,
        n_steps: 200,
        x0: KinematicState::new(2000.0, 10000.0, 0.0, -15.0, 0.0, 0.0),
        x0_std: None,
        accel: AccelProfile::Piecewise {
            segments: vec![
                Segment { start: 70, end: 200, ax: 0.0, ay: uy },
                Segment { start: 100, end: 200, ax: ux, ay: uy },
            ],
        },
        meas: MeasurementModel::default(),
    }
}

/// High-manoeuvre case: `Uy = 38` from sample 70, `Ux = 40` from sample 100.
pub fn scenario_1a() -> Scenario {
    manoeuvre("1a", 38.0, 40.0)
}

/// Low-manoeuvre case: `Uy = 1` from sample 70, `Ux = 0.8` from sample 100.
pub fn scenario_1b() -> Scenario {
    manoeuvre("1b", 1.0, 0.8)
}

/// Heavy-tailed acceleration noise: Cauchy increments, random initial state.
pub fn scenario_2() -> Scenario {
    Scenario {
        name: "2".to_string(),
        t: 1.0,
        n_steps: 200,
        x0: KinematicState::default(),
        x0_std: Some([100.0, 100.0, 10.0, 10.0, 1.0, 1.0]),
        accel: AccelProfile::StudentT { dof: 1.0, scale: 1.0, decay: 1.0 },
        meas: MeasurementModel::default(),
    }
}

/// Sinusoidal manoeuvre with a held segment on `[100, 150)` s.
pub fn scenario_3() -> Scenario {
    Scenario {
        name: "3".to_string(),
        t: 1.0,
        n_steps: 200,
        x0: KinematicState::new(10.0, -10.0, 10.0, 15.0, 0.0, 0.0),
        x0_std: None,
        accel: AccelProfile::Sinusoid { amplitude: 2.0, period: 50.0, hold_start: 100.0, hold_end: 150.0, hold: [0.0, 0.0] },
        meas: MeasurementModel::default(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthSample {
    pub k: usize,
    pub t: f64,
    pub state: KinematicState,
    pub y: Measurement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthRecord {
    pub samples: Vec<TruthSample>,
}

impl TruthRecord {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn measurements(&self) -> Vec<Measurement> {
        self.samples.iter().map(|s| s.y).collect()
    }

    pub fn states(&self) -> Vec<KinematicState> {
        self.samples.iter().map(|s| s.state).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER)?;
        for s in &self.samples {
            let mut row = vec![s.k.to_string(), fmt_f64(s.t)];
            row.extend(s.state.to_array().iter().map(|v| fmt_f64(*v)));
            row.extend(s.y.iter().map(|v| fmt_f64(*v)));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        ensure(header.iter().eq(CSV_HEADER.iter().copied()), || format!("unexpected truth header {header:?}"))
            .map_err(|e| Error::Parse(e.to_string()))?;
        let mut samples = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec[i].parse::<f64>().map_err(|e| Error::Parse(format!("row {}: column {}: {e}", line + 1, CSV_HEADER[i])))
            };
            let k = rec[0].parse::<usize>().map_err(|e| Error::Parse(format!("row {}: column k: {e}", line + 1)))?;
            let v: Vec<f64> = (1..CSV_HEADER.len()).map(num).collect::<Result<_>>()?;
            samples.push(TruthSample {
                k,
                t: v[0],
                state: KinematicState::new(v[1], v[2], v[3], v[4], v[5], v[6]),
                y: Measurement::new(v[7], v[8], v[9], v[10]),
            });
        }
        Ok(Self { samples })
    }
}

pub const CSV_HEADER: [&str; 12] = ["k", "t", "x", "y", "vx", "vy", "ax", "ay", "zx_meas", "zy_meas", "zvx_meas", "zvy_meas"];

/// Shortest scientific form that round-trips exactly (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Simulate the truth states `k = 0..=n_steps` (without measurements).
pub fn truth_states<R: Rng + ?Sized>(scn: &Scenario, rng: &mut R) -> Result<Vec<KinematicState>> {
    scn.validate()?;
    let dt = scn.t;
    let mut s = scn.x0;
    if let Some(sd) = &scn.x0_std {
        let mut v = s.to_array();
        for (x, sd) in v.iter_mut().zip(sd) {
            let e: f64 = StandardNormal.sample(rng);
            *x += sd * e;
        }
        s = KinematicState::new(v[0], v[1], v[2], v[3], v[4], v[5]);
    }
    let heavy = match &scn.accel {
        AccelProfile::StudentT { dof, scale, decay } => Some((
            StudentT::new(*dof).map_err(|e| Error::InvalidParameter(e.to_string()))?,
            *scale,
            (-decay * dt).exp(),
        )),
        _ => None,
    };
    if let Some(a) = scn.accel.command(0, 0.0) {
        [s.ax, s.ay] = a;
    }
    let mut out = Vec::with_capacity(scn.n_steps + 1);
    out.push(s);
    for k in 1..=scn.n_steps {
        let mut next = s;
        next.x += s.vx * dt + 0.5 * s.ax * dt * dt;
        next.y += s.vy * dt + 0.5 * s.ay * dt * dt;
        next.vx += s.ax * dt;
        next.vy += s.ay * dt;
        match (&heavy, scn.accel.command(k, k as f64 * dt)) {
            (_, Some(a)) => [next.ax, next.ay] = a,
            (Some((dist, scale, keep)), None) => {
                next.ax = keep * s.ax + scale * dist.sample(rng);
                next.ay = keep * s.ay + scale * dist.sample(rng);
            }
            (None, None) => unreachable!("stochastic profiles carry a distribution"),
        }
        out.push(next);
        s = next;
    }
    Ok(out)
}

/// Ground truth and measurements for samples `1..=n_steps`, deterministic
/// in `seed`.
pub fn generate(scn: &Scenario, seed: u64) -> Result<TruthRecord> {
    let mut rng = stream_rng(seed, TRUTH_STREAM);
    let states = truth_states(scn, &mut rng)?;
    let samples = states
        .into_iter()
        .enumerate()
        .skip(1)
        .map(|(k, state)| TruthSample { k, t: k as f64 * scn.t, state, y: scn.meas.measure(&state, &mut rng) })
        .collect();
    Ok(TruthRecord { samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_1a_profile() {
        let s = scenario_1a();
        assert_eq!(s.accel.command(50, 2.5), Some([0.0, 0.0]));
        assert_eq!(s.accel.command(150, 7.5), Some([40.0, 38.0]));
        assert_eq!(s.accel.command(69, 0.0), Some([0.0, 0.0]));
        assert_eq!(s.accel.command(70, 0.0), Some([0.0, 38.0]));
        assert_eq!(s.accel.command(99, 0.0), Some([0.0, 38.0]));
        assert_eq!(s.accel.command(100, 0.0), Some([40.0, 38.0]));
        assert_eq!(s.accel.command(200, 0.0), Some([40.0, 38.0]));
    }

    #[test]
    fn scenario_1a_truth_velocity() {
        let rec = generate(&scenario_1a(), 0).unwrap();
        assert_eq!(rec.len(), 200);
        assert_eq!(rec.samples[0].k, 1);
        assert_eq!(rec.samples[69].state.vy, -15.0);
        assert!((rec.samples[199].state.vy - 232.0).abs() < 1e-9);
        assert!((rec.samples[199].state.vx - 40.0 * 100.0 * 0.05).abs() < 1e-9);
    }

    #[test]
    fn scenario_1b_profile() {
        let s = scenario_1b();
        assert_eq!(s.accel.command(150, 7.5), Some([0.8, 1.0]));
        assert_eq!(s.accel.command(60, 3.0), Some([0.0, 0.0]));
        assert_eq!(s.meas, scenario_1a().meas);
    }

    #[test]
    fn straight_line_without_acceleration() {
        let mut s = scenario_1a();
        s.accel = AccelProfile::Piecewise { segments: vec![] };
        s.x0 = KinematicState::new(1.0, 2.0, 3.0, -4.0, 0.0, 0.0);
        let rec = generate(&s, 5).unwrap();
        for r in &rec.samples {
            let k = r.k as f64;
            assert!((r.state.x - (1.0 + k * 0.05 * 3.0)).abs() < 1e-12);
            assert!((r.state.y - (2.0 - k * 0.05 * 4.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_profiles_ignore_seed_in_truth() {
        let a = generate(&scenario_3(), 1).unwrap();
        let b = generate(&scenario_3(), 2).unwrap();
        assert_eq!(a.states(), b.states());
        assert_ne!(a.measurements(), b.measurements());
    }

    #[test]
    fn scenario_2_is_seeded() {
        let a = generate(&scenario_2(), 9).unwrap();
        let b = generate(&scenario_2(), 9).unwrap();
        let c = generate(&scenario_2(), 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.states(), c.states());
    }

    #[test]
    fn scenario_3_profile() {
        let s = scenario_3();
        let AccelProfile::Sinusoid { amplitude, .. } = s.accel else { panic!() };
        let mut max: f64 = 0.0;
        let mut prev = s.accel.command(0, 0.0).unwrap();
        for k in 1..=200 {
            let t = k as f64;
            let a = s.accel.command(k, t).unwrap();
            if !(100.0..150.0).contains(&t) {
                max = max.max(a[0].abs()).max(a[1].abs());
            }
            if k != 100 && k != 150 {
                // Continuous within a regime: one-second steps move the
                // sinusoid by at most A·2π/P.
                let jump = ((a[0] - prev[0]).powi(2) + (a[1] - prev[1]).powi(2)).sqrt();
                assert!(jump <= amplitude * 2.0 * std::f64::consts::PI / 50.0 + 1e-12, "k={k}");
            }
            prev = a;
        }
        assert!((max - amplitude).abs() < 1e-12);
        let before = s.accel.command(99, 99.999_999).unwrap();
        let after = s.accel.command(100, 100.0).unwrap();
        assert!(((before[0] - after[0]).powi(2) + (before[1] - after[1]).powi(2)).sqrt() > 1.0);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rec = generate(&scenario_2(), 4).unwrap();
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(text.lines().count(), 201);
        assert_eq!(TruthRecord::read_csv(&buf[..]).unwrap(), rec);
    }

    #[test]
    fn by_id() {
        for id in SCENARIO_IDS {
            assert_eq!(Scenario::by_id(id).unwrap().name, id);
        }
        assert!(Scenario::by_id("4").is_err());
    }
}
