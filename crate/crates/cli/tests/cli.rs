use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CONFIG: &str = r#"{
  "scenario": {"id": "1b", "overrides": {"n_steps": 60}},
  "filters": {
    "garch_flat": {
      "kind": "pf_garch", "n_s": 40, "mu": 0.5,
      "garch_x": {"alpha0": 2.0, "alpha1": 0.0, "beta1": 0.0},
      "garch_y": {"alpha0": 2.0, "alpha1": 0.0, "beta1": 0.0},
      "h0": 2.0,
      "prior_spread": {"pos": 100, "vel": 5, "acc": 1}
    },
    "pf": {"kind": "pf", "n_s": 40, "variance": 2.0, "mu": 0.5, "prior_spread": {"pos": 100, "vel": 5, "acc": 1}},
    "imm": {"kind": "imm", "sigma_cv": 0.1, "sigma_ca": 1.0, "p_ij": [[0.99, 0.01], [0.01, 0.99]]}
  },
  "bench": {"n_runs": 4, "base_seed": 7, "ns_list": [5, 10, 20]}
}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_garchtrack"))
}

fn setup(config: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    std::fs::write(&path, config).unwrap();
    (dir, path)
}

fn run(args: &[&str], cfg: &Path, out: &Path) -> Output {
    bin().args(args).arg("--config").arg(cfg).arg("--out").arg(out).output().unwrap()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let idx = text.lines().next().unwrap().split(',').position(|c| c == name).unwrap();
    rows(text).iter().map(|r| r[idx].parse().unwrap()).collect()
}

#[test]
fn simulate_is_byte_identical_across_reruns() {
    let (dir, cfg) = setup(&CONFIG.replace(r#", "overrides": {"n_steps": 60}"#, ""));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&["simulate"], &cfg, &a).status.success());
    assert!(run(&["simulate"], &cfg, &b).status.success());
    let text = read(a.join("truth.csv"));
    assert_eq!(text.lines().count(), 201);
    assert_eq!(text, read(b.join("truth.csv")));
    assert!(run(&["simulate", "--seed", "8"], &cfg, &b).status.success());
    assert_ne!(text, read(b.join("truth.csv")));
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let (dir, cfg) = setup(&CONFIG.replace(r#""id": "1b""#, r#""id": "9z""#));
    let out = run(&["simulate"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(2));

    let (dir, cfg) = setup(&CONFIG.replace("\"n_runs\"", "\"n_rnus\""));
    let out = run(&["bench"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_rnus"));

    let out = bin().arg("bench").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn track_writes_a_row_per_sample_and_degenerate_garch_matches_plain_pf() {
    let (dir, cfg) = setup(CONFIG);
    let out = dir.path();
    assert!(run(&["simulate"], &cfg, out).status.success());
    let truth = out.join("truth.csv");
    for id in ["garch_flat", "pf", "imm"] {
        let o = run(&["track", "--truth", truth.to_str().unwrap(), "--filter", id], &cfg, out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let garch = read(out.join("track_garch_flat.csv"));
    let plain = read(out.join("track_pf.csv"));
    assert_eq!(garch.lines().count(), 61);
    assert_eq!(read(out.join("track_imm.csv")).lines().count(), 61);
    for c in ["x_hat", "y_hat", "vx_hat", "vy_hat", "ax_hat", "ay_hat", "ess"] {
        assert_eq!(column(&garch, c), column(&plain, c), "column {c}");
    }
    let p: Vec<f64> = column(&read(out.join("track_imm.csv")), "p_cv");
    assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));

    let o = run(&["track", "--truth", out.join("missing.csv").to_str().unwrap(), "--filter", "pf"], &cfg, out);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["track", "--truth", truth.to_str().unwrap(), "--filter", "nope"], &cfg, out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn single_run_bench_matches_metrics_from_track_output() {
    let (dir, cfg) = setup(&CONFIG.replace("\"n_runs\": 4", "\"n_runs\": 1"));
    let out = dir.path();
    assert!(run(&["simulate"], &cfg, out).status.success());
    let truth = out.join("truth.csv");
    assert!(run(&["track", "--truth", truth.to_str().unwrap(), "--filter", "imm"], &cfg, out).status.success());
    assert!(run(&["bench", "--filter", "imm", "--format", "csv"], &cfg, out).status.success());

    let t = read(&truth);
    let e = read(out.join("track_imm.csv"));
    let sq = |a: &str, b: &str| -> f64 {
        column(&t, a).iter().zip(column(&e, b)).map(|(x, y)| (x - y).powi(2)).sum()
    };
    let n = 2.0 * column(&t, "x").len() as f64;
    let expect = [
        ((sq("x", "x_hat") + sq("y", "y_hat")) / n).sqrt(),
        ((sq("vx", "vx_hat") + sq("vy", "vy_hat")) / n).sqrt(),
        ((sq("ax", "ax_hat") + sq("ay", "ay_hat")) / n).sqrt(),
    ];
    let report = read(out.join("bench.csv"));
    assert_eq!(report.lines().count(), 2);
    for (name, want) in ["rmse_position", "rmse_velocity", "rmse_acceleration"].iter().zip(expect) {
        let got = column(&report, name)[0];
        assert!((got - want).abs() <= 1e-12 * want, "{name}: {got} vs {want}");
    }
}

#[test]
fn bench_reports_each_filter_and_is_deterministic() {
    let (dir, cfg) = setup(CONFIG);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = run(&["bench", "--format", "csv,table"], &cfg, &a);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("rmse_vel"));
    assert!(run(&["bench", "--format", "csv"], &cfg, &b).status.success());
    let text = read(a.join("bench.csv"));
    assert_eq!(text.lines().count(), 4);
    assert_eq!(text, read(b.join("bench.csv")));
    assert!(!a.join("bench_mse_position.svg").exists());
}

#[test]
fn bench_with_mostly_failed_runs_exits_3() {
    let cfg_text = r#"{
      "scenario": {"id": "2", "overrides": {"n_steps": 30, "accel": {"law": "student_t", "dof": 1, "scale": 1e306, "decay": 1}}},
      "filters": {"imm": {"kind": "imm", "sigma_cv": 1, "sigma_ca": 10, "p_ij": [[0.9, 0.1], [0.1, 0.9]]}},
      "bench": {"n_runs": 4}
    }"#;
    let (dir, cfg) = setup(cfg_text);
    let o = run(&["bench", "--format", "csv"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(read(dir.path().join("bench.csv")).contains("false"));
}

#[test]
fn sweep_rows_follow_ns_list_and_svg_only_on_request() {
    let (dir, cfg) = setup(CONFIG);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&["sweep", "--filter", "garch_flat", "--format", "csv"], &cfg, &a).status.success());
    assert!(run(&["sweep", "--filter", "garch_flat", "--format", "csv,svg"], &cfg, &b).status.success());
    let text = read(a.join("sweep.csv"));
    assert_eq!(text.lines().count(), 4);
    assert_eq!(text, read(b.join("sweep.csv")));
    assert!(!a.join("sweep.svg").exists());
    assert!(read(b.join("sweep.svg")).starts_with("<svg"));
    let o = run(&["sweep", "--filter", "imm"], &cfg, &a);
    assert_eq!(o.status.code(), Some(2));
}
