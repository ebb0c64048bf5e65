use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cvqkd_core::SweepConfig;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvqkd-calib"))
        .args(args)
        .env_remove("CVQKD_CALIB_JOBS")
        .output()
        .expect("binary runs")
}

fn config_arg(name: &str) -> String {
    configs().join(name).display().to_string()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

const SMALL: &str = r#"
models = ["conventional", "three_mode"]
variances = [4.0]

[distances_km]
start = 0.0
stop = 20.0
step = 10.0
"#;

#[test]
fn asymptotic_sweep_has_one_row_per_point() {
    let text = stdout(&cli(&[
        "sweep",
        "--config",
        &config_arg("asymptotic_rates.toml"),
        "--jobs",
        "2",
    ]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 3 * 3 * 201);
    assert!(lines[0].starts_with("model,regime,V,distance_km,transmittance,eps_c,"));
    assert!(lines[0].ends_with(",rate_bits_per_pulse,rate_bits_per_s,rate_clamped"));
    assert!(!text.contains('\r'));
}

#[test]
fn sweep_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let cfg = config_arg("asymptotic_rates.toml");
    for (out, jobs) in [(&a, "1"), (&b, "3")] {
        let status = cli(&[
            "sweep",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--jobs",
            jobs,
        ]);
        assert!(status.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn jobs_default_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = Command::new(env!("CARGO_BIN_EXE_cvqkd-calib"))
        .args(["sweep", "--config", &cfg])
        .env("CVQKD_CALIB_JOBS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_cvqkd-calib"))
        .args(["sweep", "--config", &cfg])
        .env("CVQKD_CALIB_JOBS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn csv_and_json_carry_the_same_values() {
    let cfg = config_arg("miscalibration.toml");
    let csv = stdout(&cli(&["sweep", "--config", &cfg, "--format", "csv"]));
    let json = stdout(&cli(&["sweep", "--config", &cfg, "--format", "json"]));
    let rows: Vec<serde_json::Map<String, serde_json::Value>> =
        serde_json::from_str(&json).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let mut count = 0;
    for (line, row) in lines.zip(&rows) {
        for (name, field) in header.iter().zip(line.split(',')) {
            let value = &row[*name];
            match value {
                serde_json::Value::Number(n) => {
                    assert_eq!(field.parse::<f64>().unwrap(), n.as_f64().unwrap(), "{name}")
                }
                serde_json::Value::String(s) => assert_eq!(field, s, "{name}"),
                serde_json::Value::Null => assert_eq!(field, "", "{name}"),
                other => panic!("unexpected {other}"),
            }
        }
        count += 1;
    }
    assert_eq!(count, rows.len());
    assert_eq!(count, 3 * 151);
}

#[test]
fn single_distance_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = cli(&["sweep", "--config", &cfg, "--set", "distances_km.stop=0.0"]);
    assert_eq!(stdout(&out).lines().count(), 1 + 2);
}

#[test]
fn pulse_rate_fills_bits_per_second() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let text = stdout(&cli(&[
        "sweep",
        "--config",
        &cfg,
        "--set",
        "pulse_rate_hz=5e6",
    ]));
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let per_pulse: f64 = f[13].parse().unwrap();
        let per_second: f64 = f[14].parse().unwrap();
        assert_eq!(per_second, per_pulse * 5e6);
    }
    let text = stdout(&cli(&["sweep", "--config", &cfg]));
    assert!(text
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(14) == Some("")));
}

#[test]
fn miscalibration_shrinks_zero_rate_distance() {
    let text = stdout(&cli(&["sweep", "--config", &config_arg("miscalibration.toml")]));
    let mut first_zero = std::collections::BTreeMap::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let delta: f64 = f[8].parse().unwrap();
        let km: f64 = f[3].parse().unwrap();
        let clamped: f64 = f[15].parse().unwrap();
        if clamped == 0.0 {
            first_zero.entry(delta.to_bits()).or_insert(km);
        }
    }
    let d = |x: f64| first_zero[&x.to_bits()];
    assert!(d(0.003) < d(0.001) && d(0.001) < d(0.0));
}

#[test]
fn ten_sweep_orders_models() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
models = ["two_mode", "three_mode"]
variances = [4.0]

[distances_km]
start = 0.0
stop = 40.0
step = 20.0
"#,
    );
    let text = stdout(&cli(&["ten", "--config", &cfg]));
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].ends_with(",ten"));
    let ten: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(ten.len(), 6);
    // Rows follow the model declaration order: two_mode, then three_mode.
    for k in 0..3 {
        assert!(ten[k] <= ten[3 + k] + 1e-4);
        assert!(ten[k] > 0.0);
    }
}

#[test]
fn calibration_report() {
    let text = stdout(&cli(&["calib", "--config", &config_arg("calibration_stats.toml")]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "m,snu_norm_ote,snu_norm_tte,dev_ote,dev_tte");
    assert_eq!(lines.len(), 7);
    for line in &lines[1..] {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(f[3] < f[4]);
    }
    let single = cli(&[
        "calib",
        "--config",
        &config_arg("calibration_stats.toml"),
        "--set",
        "calibration.m_grid=[1000]",
    ]);
    assert_eq!(stdout(&single).lines().count(), 2);
}

#[test]
fn validate_config_accepts_examples() {
    for name in [
        "miscalibration.toml",
        "calibration_stats.toml",
        "asymptotic_rates.toml",
        "finite_size_rates.toml",
        "finite_size_ten.toml",
    ] {
        let text = stdout(&cli(&["validate-config", "--config", &config_arg(name)]));
        assert!(text.contains("ok"), "{name}: {text}");
    }
}

#[test]
fn example_configs_round_trip() {
    for name in [
        "miscalibration.toml",
        "calibration_stats.toml",
        "asymptotic_rates.toml",
        "finite_size_rates.toml",
        "finite_size_ten.toml",
    ] {
        let text = std::fs::read_to_string(configs().join(name)).unwrap();
        let cfg: SweepConfig = toml::from_str(&text).unwrap();
        let again: SweepConfig = toml::from_str(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, again, "{name}");
    }
}

fn expect_exit(args: &[&str], code: i32, needle: &str) {
    let out = cli(args);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(code), "stderr: {stderr}");
    assert!(stderr.contains(needle), "expected '{needle}' in: {stderr}");
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    expect_exit(
        &["sweep", "--config", &cfg, "--set", "distances_km.step=0"],
        1,
        "distances_km.step",
    );
    expect_exit(
        &["sweep", "--config", &cfg, "--set", "models=[]"],
        1,
        "models",
    );
    expect_exit(
        &["sweep", "--config", &cfg, "--set", "system.bogus=1"],
        1,
        "bogus",
    );
    expect_exit(&["calib", "--config", &cfg], 1, "calibration");
    expect_exit(
        &["sweep", "--config", "/nonexistent/config.toml"],
        1,
        "cannot read",
    );
    expect_exit(&["sweep"], 1, "--config");

    let bad = write_config(
        dir.path(),
        "models = [\"three_mode\"]\nvariances = [4.0,\n[distances_km]\n",
    );
    expect_exit(&["validate-config", "--config", &bad], 1, "line");
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    expect_exit(
        &[
            "sweep",
            "--config",
            &cfg,
            "--out",
            "/nonexistent-dir/out.csv",
        ],
        2,
        "cannot write",
    );
    expect_exit(
        &["sweep", "--config", &cfg, "--set", "system.eta_d=1.0"],
        2,
        "error",
    );
}
