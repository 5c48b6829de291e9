//! Monte Carlo harness: scenario × filter grids, pooled RMSE, particle-count
//! sweeps and step-time scaling.
//!
//! RMSE pools squared errors over runs, time steps and both axes before the
//! square root. Run `r` uses `base_seed + r` for truth and filter alike; the
//! two draw from disjoint streams.

use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::filters::{build_tracker, FilterSpec, TrackEstimate, Tracker};
use crate::rng::{derive_seed, FILTER_STREAM};
use crate::scenarios::{fmt_f64, generate, Scenario, TruthRecord};
use crate::statespace::KinematicState;

/// Fraction of excluded runs above which a report is flagged invalid.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub scenario: Scenario,
    pub filter_id: String,
    pub filter: FilterSpec,
    pub n_runs: usize,
    pub base_seed: u64,
    /// Leading steps left out of the metrics.
    pub burn_in: usize,
}

impl RunSpec {
    pub fn new(scenario: Scenario, filter_id: impl Into<String>, filter: FilterSpec, n_runs: usize, base_seed: u64) -> Self {
        Self { scenario, filter_id: filter_id.into(), filter, n_runs, base_seed, burn_in: 0 }
    }

    pub fn run_seed(&self, r: usize) -> u64 {
        self.base_seed.wrapping_add(r as u64)
    }

    fn validate(&self) -> Result<()> {
        ensure(self.n_runs >= 1, || "n_runs must be >= 1".to_string())?;
        ensure(self.burn_in < self.scenario.n_steps, || {
            format!("burn_in {} leaves no steps out of {}", self.burn_in, self.scenario.n_steps)
        })?;
        self.scenario.validate()
    }
}

/// Squared errors of one step, each summed over the two axes:
/// `[position, velocity, acceleration]`.
pub type StepSq = [f64; 3];

pub fn step_errors(truth: &KinematicState, est: &KinematicState) -> StepSq {
    let d = |a: f64, b: f64| (a - b) * (a - b);
    [
        d(est.x, truth.x) + d(est.y, truth.y),
        d(est.vx, truth.vx) + d(est.vy, truth.vy),
        d(est.ax, truth.ax) + d(est.ay, truth.ay),
    ]
}

/// Outcome of one Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    /// Per-step squared errors, or `None` if the estimate left the finite
    /// range.
    pub errors: Option<Vec<StepSq>>,
    pub degeneracy_events: usize,
    pub wall_time_s: f64,
}

impl RunResult {
    /// Per-quantity MSE of this run (averaged over steps and axes).
    pub fn mse(&self) -> Option<[f64; 3]> {
        let e = self.errors.as_ref()?;
        let n = 2.0 * e.len() as f64;
        Some(std::array::from_fn(|q| e.iter().map(|s| s[q]).sum::<f64>() / n))
    }
}

/// Compare estimates against truth from `burn_in` on.
pub fn score(truth: &TruthRecord, estimates: &[TrackEstimate], burn_in: usize) -> Option<Vec<StepSq>> {
    debug_assert_eq!(truth.len(), estimates.len());
    let mut out = Vec::with_capacity(truth.len().saturating_sub(burn_in));
    for (s, e) in truth.samples.iter().zip(estimates).skip(burn_in) {
        if !e.kin_hat.is_finite() {
            return None;
        }
        out.push(step_errors(&s.state, &e.kin_hat));
    }
    Some(out)
}

/// Drive `tracker` over the record's measurements; the tracker must already
/// be initialised on the first one.
pub fn track(tracker: &mut dyn Tracker, truth: &TruthRecord) -> Result<Vec<TrackEstimate>> {
    crate::filters::run_tracker(tracker, &truth.measurements())
}

/// Seed of the filter for run seed `seed`.
pub fn filter_seed(seed: u64) -> u64 {
    derive_seed(seed, FILTER_STREAM)
}

pub fn run_once(spec: &RunSpec, seed: u64) -> Result<RunResult> {
    let truth = generate(&spec.scenario, seed)?;
    let start = Instant::now();
    let y0 = truth.samples[0].y;
    let mut tracker = build_tracker(&spec.filter, spec.scenario.t, spec.scenario.meas, filter_seed(seed), &y0)?;
    let estimates = match track(tracker.as_mut(), &truth) {
        Ok(e) => Some(e),
        Err(Error::SingularInnovation) => None,
        Err(e) => return Err(e),
    };
    let wall_time_s = start.elapsed().as_secs_f64();
    let errors = estimates.and_then(|e| score(&truth, &e, spec.burn_in));
    Ok(RunResult { seed, errors, degeneracy_events: tracker.degeneracy_events(), wall_time_s })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub filter_id: String,
    pub scenario: String,
    pub n_runs: usize,
    pub rmse_position: f64,
    pub rmse_velocity: f64,
    pub rmse_acceleration: f64,
    /// Per-step MSE (mean over included runs and both axes), one series per
    /// quantity.
    pub mse_series: [Vec<f64>; 3],
    /// `(seed, [mse_pos, mse_vel, mse_acc])` of every included run.
    pub per_run_mse: Vec<(u64, [f64; 3])>,
    pub excluded_runs: usize,
    pub degeneracy_count: usize,
    pub wall_time_total_s: f64,
    pub wall_time_mean_s: f64,
    pub valid: bool,
}

impl MetricReport {
    pub fn rmse(&self) -> [f64; 3] {
        [self.rmse_position, self.rmse_velocity, self.rmse_acceleration]
    }
}

/// Pool run results into a report.
pub fn aggregate(filter_id: &str, scenario: &str, runs: &[RunResult]) -> MetricReport {
    let included: Vec<&Vec<StepSq>> = runs.iter().filter_map(|r| r.errors.as_ref()).collect();
    let excluded_runs = runs.len() - included.len();
    let n_steps = included.first().map_or(0, |e| e.len());
    let mut mse_series: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; n_steps]);
    for e in &included {
        for (k, s) in e.iter().enumerate() {
            for q in 0..3 {
                mse_series[q][k] += s[q];
            }
        }
    }
    let denom = 2.0 * included.len() as f64;
    for series in &mut mse_series {
        for v in series.iter_mut() {
            *v /= denom;
        }
    }
    let rmse: [f64; 3] = std::array::from_fn(|q| {
        if n_steps == 0 {
            f64::NAN
        } else {
            (mse_series[q].iter().sum::<f64>() / n_steps as f64).sqrt()
        }
    });
    let wall_time_total_s: f64 = runs.iter().map(|r| r.wall_time_s).sum();
    MetricReport {
        filter_id: filter_id.to_string(),
        scenario: scenario.to_string(),
        n_runs: runs.len(),
        rmse_position: rmse[0],
        rmse_velocity: rmse[1],
        rmse_acceleration: rmse[2],
        mse_series,
        per_run_mse: runs.iter().filter_map(|r| Some((r.seed, r.mse()?))).collect(),
        excluded_runs,
        degeneracy_count: runs.iter().map(|r| r.degeneracy_events).sum(),
        wall_time_total_s,
        wall_time_mean_s: wall_time_total_s / runs.len().max(1) as f64,
        valid: !included.is_empty() && excluded_runs as f64 <= MAX_EXCLUDED_FRACTION * runs.len() as f64,
    }
}

/// All runs of one spec, in seed order. Runs execute on the current rayon
/// pool; results do not depend on the thread count.
pub fn run_spec(spec: &RunSpec) -> Result<Vec<RunResult>> {
    spec.validate()?;
    (0..spec.n_runs).into_par_iter().map(|r| run_once(spec, spec.run_seed(r))).collect()
}

pub fn run_grid(specs: &[RunSpec]) -> Result<Vec<MetricReport>> {
    specs
        .iter()
        .map(|s| Ok(aggregate(&s.filter_id, &s.scenario.name, &run_spec(s)?)))
        .collect()
}

/// Mean and standard error of the paired per-run MSE difference `a − b` for
/// quantity `q` (0 position, 1 velocity, 2 acceleration), over seeds included
/// in both reports.
pub fn paired_difference(a: &MetricReport, b: &MetricReport, q: usize) -> Option<(f64, f64)> {
    let diffs: Vec<f64> = a
        .per_run_mse
        .iter()
        .filter_map(|(seed, ma)| b.per_run_mse.iter().find(|(s, _)| s == seed).map(|(_, mb)| ma[q] - mb[q]))
        .collect();
    if diffs.len() < 2 {
        return None;
    }
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, (var / n).sqrt()))
}

/// Outcome of a paired comparison at a given number of standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    /// `a` is better (lower MSE) by at least the margin.
    Better,
    /// Difference within the margin.
    Tie,
    /// `a` is worse by at least the margin.
    Worse,
}

pub fn compare(a: &MetricReport, b: &MetricReport, q: usize, n_se: f64) -> Option<Ordering> {
    let (mean, se) = paired_difference(a, b, q)?;
    Some(if mean <= -n_se * se && mean < 0.0 {
        Ordering::Better
    } else if mean >= n_se * se && mean > 0.0 {
        Ordering::Worse
    } else {
        Ordering::Tie
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_s: usize,
    pub mse_position: f64,
    pub mse_velocity: f64,
    pub mse_acceleration: f64,
    pub excluded_runs: usize,
}

/// Pooled MSE per particle count under identical seeds.
pub fn particle_sweep(spec: &RunSpec, ns_list: &[usize]) -> Result<Vec<SweepRow>> {
    ensure(spec.filter.n_s().is_some(), || format!("filter {} has no particle count to sweep", spec.filter_id))?;
    ns_list
        .iter()
        .map(|&n_s| {
            let filter = spec.filter.with_n_s(n_s).expect("particle filter");
            let rep = aggregate(&spec.filter_id, &spec.scenario.name, &run_spec(&RunSpec { filter, ..spec.clone() })?);
            Ok(SweepRow {
                n_s,
                mse_position: rep.rmse_position.powi(2),
                mse_velocity: rep.rmse_velocity.powi(2),
                mse_acceleration: rep.rmse_acceleration.powi(2),
                excluded_runs: rep.excluded_runs,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingTable {
    /// `(n_s, mean seconds per filter step)`.
    pub rows: Vec<(usize, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares line through `(x, y)` with its coefficient of determination.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, intercept, r2)
}

/// Mean wall time per filter step, single-threaded, for each particle count.
/// Each point is the fastest of `reps` passes over one truth record.
pub fn timing_scaling(spec: &RunSpec, ns_list: &[usize], reps: usize) -> Result<TimingTable> {
    spec.validate()?;
    ensure(reps >= 1 && !ns_list.is_empty(), || "timing needs reps >= 1 and a non-empty n_s list".to_string())?;
    let seed = spec.base_seed;
    let truth = generate(&spec.scenario, seed)?;
    let ys = truth.measurements();
    let mut rows = Vec::with_capacity(ns_list.len());
    for &n_s in ns_list {
        let filter = spec.filter.with_n_s(n_s).unwrap_or_else(|| spec.filter.clone());
        let mut best = f64::INFINITY;
        for _ in 0..reps {
            let mut tracker = build_tracker(&filter, spec.scenario.t, spec.scenario.meas, filter_seed(seed), &ys[0])?;
            let start = Instant::now();
            for y in &ys[1..] {
                std::hint::black_box(tracker.step(y)?);
            }
            best = best.min(start.elapsed().as_secs_f64() / (ys.len() - 1).max(1) as f64);
        }
        rows.push((n_s, best));
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
    let ts: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let (slope, intercept, r2) = linear_fit(&xs, &ts);
    Ok(TimingTable { rows, slope, intercept, r2 })
}

pub const REPORT_CSV_HEADER: &str =
    "filter,scenario,n_runs,rmse_position,rmse_velocity,rmse_acceleration,excluded_runs,degeneracy_count,valid";

pub fn write_reports_csv<W: Write>(reports: &[MetricReport], mut w: W) -> Result<()> {
    writeln!(w, "{REPORT_CSV_HEADER}")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.filter_id,
            r.scenario,
            r.n_runs,
            fmt_f64(r.rmse_position),
            fmt_f64(r.rmse_velocity),
            fmt_f64(r.rmse_acceleration),
            r.excluded_runs,
            r.degeneracy_count,
            r.valid
        )?;
    }
    Ok(())
}

pub fn format_reports_table(reports: &[MetricReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<12} {:<8} {:>6} {:>12} {:>12} {:>12} {:>8} {:>6}",
        "filter", "scenario", "runs", "rmse_pos", "rmse_vel", "rmse_acc", "excluded", "valid"
    );
    for r in reports {
        let _ = writeln!(
            s,
            "{:<12} {:<8} {:>6} {:>12.4} {:>12.4} {:>12.4} {:>8} {:>6}",
            r.filter_id, r.scenario, r.n_runs, r.rmse_position, r.rmse_velocity, r.rmse_acceleration, r.excluded_runs, r.valid
        );
    }
    s.push_str("RMSE pools squared errors over runs, steps and both axes.\n");
    s
}

pub fn write_series_csv<W: Write>(reports: &[MetricReport], mut w: W) -> Result<()> {
    write!(w, "k")?;
    for r in reports {
        for q in ["pos", "vel", "acc"] {
            write!(w, ",{}_mse_{q}", r.filter_id)?;
        }
    }
    writeln!(w)?;
    let n = reports.iter().map(|r| r.mse_series[0].len()).max().unwrap_or(0);
    for k in 0..n {
        write!(w, "{}", k + 1)?;
        for r in reports {
            for q in 0..3 {
                match r.mse_series[q].get(k) {
                    Some(v) => write!(w, ",{}", fmt_f64(*v))?,
                    None => write!(w, ",")?,
                }
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> Result<()> {
    writeln!(w, "n_s,mse_position,mse_velocity,mse_acceleration,excluded_runs")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.n_s,
            fmt_f64(r.mse_position),
            fmt_f64(r.mse_velocity),
            fmt_f64(r.mse_acceleration),
            r.excluded_runs
        )?;
    }
    Ok(())
}

/// A named polyline for [`svg_line_plot`].
pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Minimal standalone SVG line chart.
pub fn svg_line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let (w, h, m) = (640.0, 400.0, 60.0);
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let py = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{m},{m} V{} H{}" fill="none" stroke="black"/>"#,
        h - m,
        w - m
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, w / 2.0, h - 15.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(y_label)
    );
    for (v, anchor, x, y) in [
        (x0, "start", m, h - m + 15.0),
        (x1, "end", w - m, h - m + 15.0),
    ] {
        let _ = writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{v:.3}</text>"#);
    }
    for (v, y) in [(y0, h - m), (y1, m)] {
        let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end">{v:.3e}</text>"#, m - 4.0);
    }
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let d: Vec<String> = ser
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        if !d.is_empty() {
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.join(" "));
        }
        let ly = m + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" fill="{color}" text-anchor="end">{}</text>"#,
            w - m - 4.0,
            escape(ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
