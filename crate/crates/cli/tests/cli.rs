use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn translum(args: &[&str]) -> Output {
    translum_env(args, &[])
}

fn translum_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_translum"));
    cmd.args(args).env_remove("TRANSLUM_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("stdout is not one JSON document: {e}"))
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("cfg.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const NOISY: &str = r#"{
    "link": {"data_rate": "5 Mbit/s", "modulation": "PWM", "seed": 3},
    "tissue": {"preset": "bone10_skin7"},
    "receiver": {"thermal_noise_vrms": "60 mV"}
}"#;

#[test]
fn link_run_writes_reports_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = translum(&["link", "run", "--frames", "20", "--seed", "5", "--out", out_dir.to_str().unwrap(), "--json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["frames_sent"], 20);
    assert_eq!(report["bit_errors"], 0);
    assert_eq!(report["bits_compared"], 20 * 1520);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"].as_str().unwrap().split_whitespace().take(2).collect::<Vec<_>>(), ["link", "run"]);
    assert_eq!(manifest["config_digest"], report["config_digest"]);
    for f in ["report.json", "report.csv"] {
        assert!(out_dir.join(f).is_file(), "{f}");
    }
}

#[test]
fn human_summary_is_not_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = translum(&["link", "run", "--frames", "5", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(serde_json::from_slice::<Value>(&out.stdout).is_err());
    assert!(String::from_utf8_lossy(&out.stdout).contains("BER"));
}

#[test]
fn same_seed_same_results_timing_aside() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), NOISY);
    let run = |name: &str, threads: &str| {
        let d = dir.path().join(name);
        let out = translum(&["link", "run", "--config", &cfg, "--frames", "40", "--seed", "7", "--threads", threads, "--out", d.to_str().unwrap(), "--json"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let mut v: Value = serde_json::from_str(&fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("wall_seconds");
        v
    };
    let a = run("a", "1");
    let b = run("b", "3");
    assert_eq!(a, b);
    assert!(a["bit_errors"].as_u64().unwrap() > 0);
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), NOISY);
    let digest = |args: &[&str], env: &[(&str, &str)]| {
        let d = tempfile::tempdir().unwrap();
        let mut full = vec!["link", "run", "--config", &cfg, "--frames", "3", "--json", "--out", d.path().to_str().unwrap()];
        full.extend_from_slice(args);
        let out = translum_env(&full, env);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        stdout_json(&out)["config_digest"].as_str().unwrap().to_string()
    };
    let from_config = digest(&[], &[]);
    let env_9 = digest(&[], &[("TRANSLUM_SEED", "9")]);
    let flag_9 = digest(&["--seed", "9"], &[]);
    let flag_beats_env = digest(&["--seed", "9"], &[("TRANSLUM_SEED", "11")]);
    assert_ne!(from_config, env_9);
    assert_eq!(env_9, flag_9);
    assert_eq!(flag_9, flag_beats_env);
    assert_eq!(from_config, digest(&["--seed", "3"], &[]));

    let out = translum_env(&["link", "run", "--frames", "1", "--out", dir.path().to_str().unwrap()], &[("TRANSLUM_SEED", "abc")]);
    assert_eq!(code(&out), 2);
}

#[test]
fn dark_link_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"link": {"data_rate": "2 Mbit/s", "modulation": "PDM", "led_peak_power": "0 W"}}"#);
    let out = translum(&["link", "run", "--config", &cfg, "--frames", "4", "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&out), 3);
}

#[test]
fn configuration_and_usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("o");
    let o = out_dir.to_str().unwrap();
    let missing = translum(&["link", "run", "--config", "/nonexistent/cfg.json", "--out", o]);
    assert_eq!(code(&missing), 2);
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));

    let bad_rate = write_config(dir.path(), r#"{"link": {"data_rate": "fast"}}"#);
    assert_eq!(code(&translum(&["link", "run", "--config", &bad_rate, "--out", o])), 2);

    let bad_unit = write_config(dir.path(), r#"{"link": {"led_peak_power": "3 furlongs"}}"#);
    assert_eq!(code(&translum(&["link", "run", "--config", &bad_unit, "--out", o])), 2);

    assert_eq!(code(&translum(&["link", "frobnicate"])), 2);
    assert_eq!(code(&translum(&["link", "table1", "--rows", "9mbps-pwm", "--out", o])), 2);
    assert_eq!(code(&translum(&["fus", "sweep", "--f-min", "2e6", "--f-max", "1e6", "--out", o])), 2);

    // A regular file where the output directory should go.
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = translum(&["link", "run", "--frames", "1", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn table1_filter_and_flag() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    let out = translum(&["link", "table1", "--rows", "5mbps-pwm,0.5mbps-pwm", "--frames", "10", "--out", o, "--json", "--svg"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    let rows = v["rows"].as_array().unwrap();
    // 5 Mbit/s PWM appears on all three tissues, 0.5 Mbit/s on one.
    assert_eq!(rows.len(), 4);
    let flagged = v["inconsistent_rows"].as_array().unwrap();
    assert_eq!(flagged.len(), 1);
    assert!(flagged[0].as_str().unwrap().starts_with("0.5mbps-pwm "));
    assert!(rows.iter().all(|r| r["report"]["bit_errors"] == 0));
    let csv = fs::read_to_string(dir.path().join("table1.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(fs::read_to_string(dir.path().join("table1.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn budget_exact_output() {
    let out = translum(&["budget", "--channels", "41", "--fs", "2000", "--bits", "24", "--rate", "2e6"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("1,968,000"), "{text}");
    assert!(text.contains("2,009,432"), "{text}");

    let out = translum(&["budget", "--channels", "32", "--fs", "9700", "--bits", "16", "--json"]);
    let v = stdout_json(&out);
    assert_eq!(v["required_rate_bps"], "4966400");
    assert_eq!(v["framed_rate_bps_rounded"], 5_070_956);
    assert_eq!(v["raw_ok"], true);
    assert_eq!(v["framed_ok"], false);

    assert_eq!(code(&translum(&["budget", "--channels", "0", "--fs", "1", "--bits", "1"])), 2);
}

#[test]
fn fus_array_and_safety() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    let out = translum(&["fus", "array", "--out", o, "--json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let total = stdout_json(&out)["total"].as_f64().unwrap();
    assert!((total - 10e-3).abs() <= 0.2e-3, "{total}");
    assert_eq!(fs::read_to_string(dir.path().join("fus_array.csv")).unwrap().lines().count(), 7);

    let out = translum(&["fus", "sweep", "--p0", "31e3", "--out", o]);
    assert_eq!(code(&out), 4);
    let out = translum(&["fus", "array", "--p0", "31e3", "--out", o]);
    assert_eq!(code(&out), 4);
}

#[test]
fn fus_sweep_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    let out = translum(&["fus", "sweep", "--f-steps", "11", "--r-steps", "7", "--out", o, "--json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["cells"], 77);
    assert!(v["best_power_w"].as_f64().unwrap() <= 3.0e-3 * (1.0 + 1e-9));
    let csv = fs::read_to_string(dir.path().join("fus_sweep.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "f_hz,r_ohm,power_w");
    assert_eq!(csv.lines().count(), 78);
}
