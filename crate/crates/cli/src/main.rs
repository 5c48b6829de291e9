//! `garchtrack` command-line front end.

mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use garchtrack::bench::{
    self, filter_seed, format_reports_table, particle_sweep, run_grid, svg_line_plot, write_reports_csv,
    write_series_csv, write_sweep_csv, RunSpec, Series,
};
use garchtrack::filters::{build_tracker, FilterKind};
use garchtrack::scenarios::{fmt_f64, generate, TruthRecord};

use crate::config::{Config, Format};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] garchtrack::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("benchmark invalid: {0}")]
    InvalidBench(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::InvalidBench(_) => 3,
            _ => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "garchtrack", version, about = "Manoeuvring-target tracking with GARCH-driven particle filters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to the config's `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run seed, replacing `bench.base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output formats, comma separated (defaults to the config's `output.formats`).
    #[arg(long, value_enum, value_delimiter = ',')]
    format: Vec<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate ground truth and measurements (`truth.csv`).
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Run one filter over a truth file (`track_<filter>.csv`).
    Track {
        #[command(flatten)]
        common: Common,
        /// Truth CSV written by `simulate`.
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        filter: String,
    },
    /// Monte Carlo RMSE for every configured filter.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Benchmark only this filter.
        #[arg(long)]
        filter: Option<String>,
    },
    /// Pooled MSE against particle count.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Filter to sweep (defaults to the first particle filter).
        #[arg(long)]
        filter: Option<String>,
    },
}

struct Ctx {
    cfg: Config,
    out: PathBuf,
    seed: u64,
    formats: Vec<Format>,
}

impl Ctx {
    fn new(common: &Common) -> Result<Self, CliError> {
        let cfg = Config::load(&common.config)?;
        let out = common.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
        let seed = common.seed.unwrap_or(cfg.bench.base_seed);
        let formats = if common.format.is_empty() { cfg.output.formats.clone() } else { common.format.clone() };
        std::fs::create_dir_all(&out).map_err(|source| CliError::Io { path: out.clone(), source })?;
        Ok(Self { cfg, out, seed, formats })
    }

    fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    fn create(&self, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
        let path = self.out.join(name);
        let file = File::create(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        Ok((path, BufWriter::new(file)))
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn cmd_simulate(common: &Common) -> Result<(), CliError> {
    let ctx = Ctx::new(common)?;
    let scn = ctx.cfg.resolve_scenario()?;
    let rec = generate(&scn, ctx.seed)?;
    let (path, mut w) = ctx.create("truth.csv")?;
    rec.write_csv(&mut w)?;
    w.flush().map_err(io_err(&path))?;
    eprintln!("wrote {} ({} samples)", path.display(), rec.len());
    Ok(())
}

fn cmd_track(common: &Common, truth: &Path, filter_id: &str) -> Result<(), CliError> {
    let ctx = Ctx::new(common)?;
    let spec = ctx.cfg.filter(filter_id)?;
    let scn = ctx.cfg.resolve_scenario()?;
    let file = File::open(truth).map_err(|e| CliError::Usage(format!("{}: {e}", truth.display())))?;
    let rec = TruthRecord::read_csv(file)?;
    if rec.is_empty() {
        return Err(CliError::Usage(format!("{}: no samples", truth.display())));
    }
    let ys = rec.measurements();
    let mut tracker = build_tracker(spec, scn.t, scn.meas, filter_seed(ctx.seed), &ys[0])?;
    let kind = spec.kind();
    let (path, mut w) = ctx.create(&format!("track_{filter_id}.csv"))?;
    let mut header = vec!["k", "t", "x_hat", "y_hat", "vx_hat", "vy_hat", "ax_hat", "ay_hat"];
    match kind {
        FilterKind::PfGarch => header.extend(["hx_hat", "hy_hat", "ess", "resampled"]),
        FilterKind::Pf => header.extend(["ess", "resampled"]),
        FilterKind::Imm => header.extend(["p_cv", "p_ca"]),
    }
    writeln!(w, "{}", header.join(",")).map_err(io_err(&path))?;
    for (i, s) in rec.samples.iter().enumerate() {
        let est = if i == 0 { tracker.estimate() } else { tracker.step(&s.y)? };
        let mut row = vec![s.k.to_string(), fmt_f64(s.t)];
        row.extend(est.kin_hat.to_array().iter().map(|v| fmt_f64(*v)));
        if let Some(v) = est.vol_hat {
            row.extend([fmt_f64(v.hx), fmt_f64(v.hy)]);
        }
        match (kind, tracker.diagnostics()) {
            (FilterKind::Imm, _) => {
                let p = est.model_probs.unwrap_or([f64::NAN; 2]);
                row.extend([fmt_f64(p[0]), fmt_f64(p[1])]);
            }
            (_, Some(d)) => row.extend([fmt_f64(d.ess), u8::from(d.resampled).to_string()]),
            // The initial estimate precedes any weighting.
            (_, None) => row.extend([fmt_f64(spec.n_s().unwrap_or(0) as f64), "0".to_string()]),
        }
        writeln!(w, "{}", row.join(",")).map_err(io_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;
    eprintln!("wrote {} ({} rows)", path.display(), rec.len());
    Ok(())
}

fn run_specs(ctx: &Ctx, ids: &[String]) -> Result<Vec<RunSpec>, CliError> {
    let scn = ctx.cfg.resolve_scenario()?;
    ids.iter()
        .map(|id| {
            let mut spec = RunSpec::new(scn.clone(), id.clone(), ctx.cfg.filter(id)?.clone(), ctx.cfg.bench.n_runs, ctx.seed);
            spec.burn_in = ctx.cfg.bench.burn_in;
            Ok(spec)
        })
        .collect()
}

fn cmd_bench(common: &Common, filter: Option<&str>) -> Result<(), CliError> {
    let ctx = Ctx::new(common)?;
    let ids = match filter {
        Some(id) => {
            ctx.cfg.filter(id)?;
            vec![id.to_string()]
        }
        None => ctx.cfg.bench_filters(),
    };
    let reports = run_grid(&run_specs(&ctx, &ids)?)?;
    if ctx.wants(Format::Csv) {
        let (path, mut w) = ctx.create("bench.csv")?;
        write_reports_csv(&reports, &mut w)?;
        w.flush().map_err(io_err(&path))?;
        let (path, mut w) = ctx.create("bench_series.csv")?;
        write_series_csv(&reports, &mut w)?;
        w.flush().map_err(io_err(&path))?;
    }
    if ctx.wants(Format::Table) {
        print!("{}", format_reports_table(&reports));
    }
    if ctx.wants(Format::Svg) {
        let t = ctx.cfg.resolve_scenario()?.t;
        for (q, name) in ["position", "velocity", "acceleration"].iter().enumerate() {
            let series: Vec<Series<'_>> = reports
                .iter()
                .map(|r| Series {
                    label: &r.filter_id,
                    points: r.mse_series[q].iter().enumerate().map(|(k, v)| ((k + 1 + ctx.cfg.bench.burn_in) as f64 * t, *v)).collect(),
                })
                .collect();
            let svg = svg_line_plot(&format!("{name} MSE, scenario {}", ctx.cfg.scenario.id), "t (s)", "MSE", &series);
            let path = ctx.out.join(format!("bench_mse_{name}.svg"));
            std::fs::write(&path, svg).map_err(io_err(&path))?;
        }
    }
    let invalid: Vec<&str> = reports.iter().filter(|r| !r.valid).map(|r| r.filter_id.as_str()).collect();
    if invalid.is_empty() {
        Ok(())
    } else {
        Err(CliError::InvalidBench(format!(
            "more than {:.0}% of runs excluded for: {}",
            bench::MAX_EXCLUDED_FRACTION * 100.0,
            invalid.join(", ")
        )))
    }
}

fn cmd_sweep(common: &Common, filter: Option<&str>) -> Result<(), CliError> {
    let ctx = Ctx::new(common)?;
    let id = match filter {
        Some(id) => id.to_string(),
        None => ctx
            .cfg
            .bench_filters()
            .into_iter()
            .find(|id| ctx.cfg.filters[id].n_s().is_some())
            .ok_or_else(|| CliError::Config("no particle filter configured to sweep".into()))?,
    };
    if ctx.cfg.filter(&id)?.n_s().is_none() {
        return Err(CliError::Usage(format!("filter {id:?} has no particle count to sweep")));
    }
    if ctx.cfg.bench.ns_list.is_empty() {
        return Err(CliError::Config("bench.ns_list is empty".into()));
    }
    let spec = run_specs(&ctx, std::slice::from_ref(&id))?.remove(0);
    let rows = particle_sweep(&spec, &ctx.cfg.bench.ns_list)?;
    if ctx.wants(Format::Csv) {
        let (path, mut w) = ctx.create("sweep.csv")?;
        write_sweep_csv(&rows, &mut w)?;
        w.flush().map_err(io_err(&path))?;
    }
    if ctx.wants(Format::Table) {
        println!("{:>6} {:>14} {:>14} {:>14}", "n_s", "mse_pos", "mse_vel", "mse_acc");
        for r in &rows {
            println!("{:>6} {:>14.4} {:>14.4} {:>14.4}", r.n_s, r.mse_position, r.mse_velocity, r.mse_acceleration);
        }
    }
    if ctx.wants(Format::Svg) {
        let series: Vec<Series<'_>> = [("position", 0), ("velocity", 1), ("acceleration", 2)]
            .iter()
            .map(|&(label, q)| Series {
                label,
                points: rows
                    .iter()
                    .map(|r| (r.n_s as f64, [r.mse_position, r.mse_velocity, r.mse_acceleration][q]))
                    .collect(),
            })
            .collect();
        let svg = svg_line_plot(&format!("MSE vs particles, {id}, scenario {}", ctx.cfg.scenario.id), "n_s", "MSE", &series);
        let path = ctx.out.join("sweep.svg");
        std::fs::write(&path, svg).map_err(io_err(&path))?;
    }
    Ok(())
}

fn configure_threads() {
    let Ok(v) = std::env::var("GARCHTRACK_THREADS") else { return };
    match v.parse::<usize>() {
        Ok(n) if n >= 1 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring GARCHTRACK_THREADS={v:?}: expected a positive integer"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    configure_threads();
    let result = match &cli.command {
        Command::Simulate { common } => cmd_simulate(common),
        Command::Track { common, truth, filter } => cmd_track(common, truth, filter),
        Command::Bench { common, filter } => cmd_bench(common, filter.as_deref()),
        Command::Sweep { common, filter } => cmd_sweep(common, filter.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("garchtrack: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
