use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chemospread::harness::commands::RunSummary;
use chemospread::harness::snapshot::{read_snapshot, write_snapshot};
use chemospread::harness::RunConfig;
use chemospread::model::{Field, State};
use tempfile::TempDir;

const SMALL: &str = r#"{
  "params": {"chi": 0.5, "a": 1.0, "b": 1.0, "lambda": 1.0, "mu": 1.0, "dim": 1},
  "grid": {"lo": [-100.0], "hi": [100.0], "n": [2001], "boundary": "neumann"},
  "scheme": {"dt": 0.05},
  "initial": {"shape": {"kind": "compact_bump", "radius": 10.0}},
  "horizon": 30.0,
  "analysis": {"speed_tolerance": 0.1, "persistence_start": 20.0, "calibrate": true}
}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chemospread"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn patched(f: impl FnOnce(&mut serde_json::Value)) -> String {
    let mut v: serde_json::Value = serde_json::from_str(SMALL).unwrap();
    f(&mut v);
    v.to_string()
}

fn run_small(tmp: &TempDir) -> (PathBuf, Output) {
    let config = write_config(tmp.path(), "small.json", SMALL);
    let out = tmp.path().join("out");
    let output = bin()
        .args(["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    (out, output)
}

fn verify(out: &Path) -> Output {
    bin().args(["verify", "--out", out.to_str().unwrap()]).output().unwrap()
}

#[test]
fn missing_parameter_exits_with_config_code() {
    let tmp = TempDir::new().unwrap();
    let text = patched(|v| {
        v["params"].as_object_mut().unwrap().remove("a");
    });
    let config = write_config(tmp.path(), "bad.json", &text);
    let output = bin().args(["run", "--config", config.to_str().unwrap()]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("params.a"));
}

#[test]
fn unknown_key_exits_with_config_code() {
    let tmp = TempDir::new().unwrap();
    let text = patched(|v| v["scheme"]["step"] = 0.1.into());
    let config = write_config(tmp.path(), "bad.json", &text);
    let output = bin().args(["run", "--config", config.to_str().unwrap()]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("scheme.step"));
}

#[test]
fn oversized_fixed_step_exits_with_numerical_code() {
    let tmp = TempDir::new().unwrap();
    let text = patched(|v| {
        v["scheme"] = serde_json::json!({"dt": 40.0, "dt_policy": "fixed"});
        v["observe"] = serde_json::json!({"cadence": 40.0});
        v["horizon"] = 120.0.into();
    });
    let config = write_config(tmp.path(), "unstable.json", &text);
    let out = tmp.path().join("out");
    let output = bin()
        .args(["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert_eq!(output.status.code(), Some(3), "{stderr}");
    assert!(stderr.contains("stopped after t = 40") && stderr.contains("at t = 80"), "{stderr}");
}

#[test]
fn unreadable_config_file_exits_with_config_code() {
    let output = bin().args(["run", "--config", "/nonexistent/config.json"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn fisher_run_writes_fronts() {
    let tmp = TempDir::new().unwrap();
    let text = patched(|v| {
        v["params"]["chi"] = 0.0.into();
        v["analysis"]["calibrate"] = false.into();
    });
    let config = write_config(tmp.path(), "fisher.json", &text);
    let out = tmp.path().join("out");
    let output = bin()
        .args(["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let mut reader = csv::Reader::from_path(out.join("fronts.csv")).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["t", "threshold", "direction", "position", "trusted"]
    );
    assert!(reader.records().count() > 100);
}

#[test]
fn fronts_csv_round_trips_at_full_precision() {
    let tmp = TempDir::new().unwrap();
    let (out, output) = run_small(&tmp);
    assert!(output.status.success());
    let summary: RunSummary = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let expected: Vec<(f64, f64)> = summary
        .record
        .fronts
        .iter()
        .flat_map(|tr| tr.samples.iter().map(|s| (s.t, s.position)))
        .collect();
    let mut reader = csv::Reader::from_path(out.join("fronts.csv")).unwrap();
    let got: Vec<(f64, f64)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[3].parse().unwrap())
        })
        .collect();
    assert_eq!(got.len(), expected.len());
    for (g, e) in got.iter().zip(&expected) {
        assert_eq!(g.0.to_bits(), e.0.to_bits());
        assert_eq!(g.1.to_bits(), e.1.to_bits());
    }
}

#[test]
fn verify_agrees_with_run_and_is_idempotent() {
    let tmp = TempDir::new().unwrap();
    let (out, output) = run_small(&tmp);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let first = verify(&out);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stdout));
    let a = fs::read(out.join("verify.json")).unwrap();
    let second = verify(&out);
    assert_eq!(second.status.code(), Some(0));
    let b = fs::read(out.join("verify.json")).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, fs::read(out.join("report.json")).unwrap());
}

#[test]
fn tampered_snapshot_fails_the_residual_clause() {
    let tmp = TempDir::new().unwrap();
    let (out, output) = run_small(&tmp);
    assert!(output.status.success());
    // A snapshot at t = 10, with u negated on a patch behind the front.
    let path = out.join("snapshots").join("snap_00005_a.bin");
    let s = read_snapshot(&path).unwrap();
    assert_eq!(s.t, 10.0);
    let g = s.u.grid_arc().clone();
    let values: Vec<f64> = s
        .u
        .values()
        .iter()
        .enumerate()
        .map(|(i, &u)| if g.coord(0, i).abs() < 5.0 { -u } else { u })
        .collect();
    let tampered = State::new(Field::from_values(g, values).unwrap(), s.v.clone(), s.t).unwrap();
    write_snapshot(&path, &tampered).unwrap();

    let output = verify(&out);
    assert_eq!(output.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    let clause = report["clauses"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "supersolution_residual")
        .unwrap();
    assert_eq!(clause["status"], "fail");
}

#[test]
fn verify_without_artifacts_exits_with_io_code() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(verify(tmp.path()).status.code(), Some(4));
}

#[test]
fn written_config_loads_back_equal() {
    let tmp = TempDir::new().unwrap();
    let (out, output) = run_small(&tmp);
    assert!(output.status.success());
    let written = RunConfig::load(&out.join("config.json")).unwrap();
    assert_eq!(written, RunConfig::from_json_str(SMALL).unwrap());
}

fn sweep(config: &Path, out: &Path, jobs: usize) -> String {
    let output = bin()
        .args([
            "sweep",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--jobs",
            &jobs.to_string(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    fs::read_to_string(out.join("sweep.csv")).unwrap()
}

#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let text = patched(|v| {
        v["horizon"] = 10.0.into();
        v["analysis"]["calibrate"] = false.into();
        v["sweep"] = serde_json::json!({"axes": [{"param": "chi", "values": [0.0, 0.3]}, {"param": "b", "values": [1.0, 2.0]}]});
    });
    let config = write_config(tmp.path(), "sweep.json", &text);
    let one = sweep(&config, &tmp.path().join("one"), 1);
    let three = sweep(&config, &tmp.path().join("three"), 3);
    assert_eq!(one, three);
    // Columns 1 and 3 are chi and b; the last axis varies fastest.
    let mut reader = csv::Reader::from_reader(one.as_bytes());
    let lattice: Vec<(String, String)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[1].to_string(), r[3].to_string())
        })
        .collect();
    assert_eq!(
        lattice,
        [("0.0", "1.0"), ("0.0", "2.0"), ("0.3", "1.0"), ("0.3", "2.0")].map(|(a, b)| (a.to_string(), b.to_string()))
    );
}

#[test]
fn single_point_sweep_has_one_row() {
    let tmp = TempDir::new().unwrap();
    let text = patched(|v| {
        v["horizon"] = 10.0.into();
        v["analysis"]["calibrate"] = false.into();
        v["sweep"] = serde_json::json!({"axes": [{"param": "chi", "values": [0.2]}]});
    });
    let config = write_config(tmp.path(), "sweep.json", &text);
    let csv_text = sweep(&config, &tmp.path().join("out"), 2);
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let records: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(records.len(), 1);
    assert_eq!(&records[0][1], "0.2");
}

#[test]
fn theory_prints_constants() {
    let output = bin().args(["theory", "--a", "1", "--dim", "2", "--eps", "0.5"]).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["floor_respected"], true);
    let floor = report["bundle"]["lambda_floor"].as_f64().unwrap();
    assert!((floor - 3.0 * 0.5 / 16.0).abs() < 1e-15);
    for study in report["eigen_residual_studies"].as_array().unwrap() {
        for order in study["orders"].as_array().unwrap() {
            assert!(order.as_f64().unwrap() >= 1.9);
        }
    }
    let bad = bin().args(["theory", "--a", "1", "--eps", "1.5"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
