use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qcap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcap")).args(args).output().expect("spawn qcap")
}

fn read_payload(path: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["generated_unix"] = Value::from(0);
    v
}

#[test]
fn capacity_report_is_written_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let csv = dir.path().join("table.csv");
    let o = qcap(&[
        "capacity",
        "--channel",
        "identity:2",
        "--restarts",
        "4",
        "--out",
        out.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_payload(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "capacity");
    assert!(v["violations"].as_array().unwrap().is_empty());
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.lines().count() > 1);
}

#[test]
fn config_file_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{
  "command": "potential",
  "channels": ["amplitude_damping:0.3"],
  "solver": {"restarts": 3, "seed": 11}
}"#,
    )
    .unwrap();
    let out = dir.path().join("report.json");
    let mut payloads = Vec::new();
    for _ in 0..2 {
        let o = qcap(&["potential", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        payloads.push(read_payload(&out));
    }
    assert_eq!(payloads[0], payloads[1]);
}

#[test]
fn malformed_config_reports_line_and_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\n  \"command\": \"capacity\",\n  \"channels\": [\"identity:2\"],\n  \"bogus\": 1\n}").unwrap();
    let o = qcap(&["capacity", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn out_of_range_parameter_exits_3() {
    let o = qcap(&["capacity", "--channel", "dephasing:3"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn non_cptp_custom_channel_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad_channel.json");
    std::fs::write(
        &path,
        r#"{"d_in": 2, "d_out": 2, "kraus": [{"rows": 2, "cols": 2, "real": [[1, 0], [0, 2]], "imag": [[0, 0], [0, 0]]}]}"#,
    )
    .unwrap();
    let spec = format!("custom:{}", path.display());
    let o = qcap(&["classify", "--channel", &spec]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn custom_channel_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flip.json");
    std::fs::write(
        &path,
        r#"{"name": "bit flip", "d_in": 2, "d_out": 2, "kraus": [
  {"rows": 2, "cols": 2, "real": [[0.9486832980505138, 0], [0, 0.9486832980505138]], "imag": [[0, 0], [0, 0]]},
  {"rows": 2, "cols": 2, "real": [[0, 0.31622776601683794], [0.31622776601683794, 0]], "imag": [[0, 0], [0, 0]]}
]}"#,
    )
    .unwrap();
    let spec = format!("custom:{}", path.display());
    let o = qcap(&["classify", "--channel", &spec, "--restarts", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["command"], "classify");
}
