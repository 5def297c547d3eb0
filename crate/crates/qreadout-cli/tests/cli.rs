use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use qreadout::bench::{fit_loglog_slope, median};
use qreadout_cli::output::read_series_csv;
use serde_json::Value;

fn qreadout(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qreadout"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("QREADOUT_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(o: &Output) -> String {
    assert_eq!(o.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn read(p: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn estimate_shots_prints_the_table_row() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&qreadout(dir.path(), &["estimate-shots", "--class", "w21", "--dim", "2", "--eps", "0.01"]));
    assert!(stdout.contains("RSR 1e8, ARSR 1e6, FSR 4.6e5"), "{stdout}");
    let csv = String::from_utf8(read(dir.path().join("shots.csv"))).unwrap();
    assert!(csv.starts_with("class,d,eps,method,shots,acceleration\n"));
    assert!(csv.contains("W21,2,0.01,fsr,460000,220\n"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = qreadout(dir.path(), &["bench", "example1", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    let o = qreadout(dir.path(), &["readout", "--method", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_failure_writes_an_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let o = qreadout(dir.path(), &["readout", "--input", "/definitely/missing.csv"]);
    assert_eq!(o.status.code(), Some(1));
    let rec: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(rec["status"], "error");
    assert_eq!(rec["command"], "readout");
    assert!(rec["message"].as_str().unwrap().contains("missing.csv"));

    let o = qreadout(dir.path(), &["burgers", "run", "--kappa", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let rec: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(rec["kind"], "InvalidArgument");
}

#[test]
fn bench_runs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["bench", "example2", "--methods", "fsr", "--shots", "10000", "--repeats", "1", "--seed", "7"];
    ok(&qreadout(a.path(), &args));
    ok(&qreadout(b.path(), &args));
    for f in ["results.csv", "summary.csv"] {
        assert_eq!(read(a.path().join(f)), read(b.path().join(f)), "{f}");
    }
    assert_eq!(manifest(a.path())["artifacts"], manifest(b.path())["artifacts"]);
    assert_eq!(manifest(a.path())["config"]["seed"], 7);
}

#[test]
fn bench_output_reproduces_the_reported_slope() {
    let dir = tempfile::tempdir().unwrap();
    ok(&qreadout(
        dir.path(),
        &["bench", "example1", "--methods", "rsr", "--shots", "1000,4000,16000,64000", "--repeats", "3", "--qubits", "4"],
    ));
    let rows = read_series_csv(&dir.path().join("results.csv")).unwrap();
    let mut by_x: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.method == "rsr" && r.abscissa_kind == "shots") {
        by_x.entry(r.abscissa as u64).or_default().push(r.l2ns_error);
    }
    let x: Vec<f64> = by_x.keys().map(|&k| k as f64).collect();
    let y: Vec<f64> = by_x.values().map(|v| median(v)).collect();
    let (slope, _) = fit_loglog_slope(&x, &y).unwrap();
    let summary = String::from_utf8(read(dir.path().join("summary.csv"))).unwrap();
    let line = summary.lines().find(|l| l.starts_with("rsr,")).unwrap();
    let reported: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(slope, reported);
}

#[test]
fn manifest_rerun_reproduces_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(&qreadout(
        a.path(),
        &["readout", "--function", "sine2d", "--qubits", "4", "--method", "fsr", "--shots", "5000", "--seed", "3"],
    ));
    let m = a.path().join("manifest.json");
    ok(&qreadout(b.path(), &["--config", m.to_str().unwrap(), "readout"]));
    for f in ["reconstruction.csv", "coefficients.csv"] {
        assert_eq!(read(a.path().join(f)), read(b.path().join(f)), "{f}");
    }
    let o = qreadout(b.path(), &["--config", m.to_str().unwrap(), "burgers", "run"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"dims": [1], "eps": [0.1], "classes": ["W11"]}"#).unwrap();
    let out = dir.path().join("o");
    ok(&qreadout(&out, &["--config", cfg.to_str().unwrap(), "estimate-shots", "--eps", "0.01"]));
    let m = manifest(&out);
    assert_eq!(m["config"]["dims"], serde_json::json!([1]));
    assert_eq!(m["config"]["eps"], serde_json::json!([0.01]));

    std::fs::write(&cfg, r#"{"dimz": [1]}"#).unwrap();
    let o = qreadout(&out, &["--config", cfg.to_str().unwrap(), "estimate-shots"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qreadout"))
        .args(["estimate-shots", "--dim", "1", "--eps", "0.1"])
        .env("QREADOUT_OUT_DIR", dir.path())
        .output()
        .unwrap();
    ok(&o);
    assert!(dir.path().join("shots.csv").exists());
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn heatmap_matches_golden_fixture() {
    let dir = tempfile::tempdir().unwrap();
    ok(&qreadout(
        dir.path(),
        &["cfd", "visualize", "--field", "cavity-analog", "--qubits", "4", "--quantities", "stream"],
    ));
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/cavity_stream_q4.pgm");
    assert_eq!(read(dir.path().join("stream.pgm")), read(fixture));
    let m = manifest(dir.path());
    assert_eq!(m["artifacts"][0]["path"], "stream.pgm");
    assert_eq!(m["artifacts"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn burgers_trace_and_field_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&qreadout(
        dir.path(),
        &["burgers", "run", "--qubits", "3", "--steps", "2", "--exact", "--dump-fields"],
    ));
    assert!(stdout.contains("L2NS error"));
    let trace = String::from_utf8(read(dir.path().join("trace.csv"))).unwrap();
    assert_eq!(trace.lines().next(), Some("step,p_k,cumulative,l2ns_error,shots"));
    assert_eq!(trace.lines().count(), 3);
    assert!(dir.path().join("fields/step_002.csv").exists());
    let m = manifest(dir.path());
    assert!(m["config"]["shots"].is_null());
    assert!(m["summary"]["final_error"].as_f64().unwrap() < 1e-10);
}
