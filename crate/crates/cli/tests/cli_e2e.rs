//! End-to-end runs of the `ckepler` binary: exit-code matrix, output
//! schemas and determinism.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_ckepler");

const CARTESIAN: &str = r#""initial_state": [1.0, 0.5, 0.2, 0.3, 0.6, 0.1], "mode": "cartesian""#;
const EQUATORIAL: &str = r#""initial_state": [1.0, 0.2, 1.3, 0.8], "mode": "equatorial""#;

fn config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, body).unwrap();
    path
}

fn standard(alpha: f64, t_end: f64, state_and_mode: &str, extra: &str) -> String {
    format!(
        r#"{{"alpha": {alpha}, "m": 1.0, "k": 1.0, "t_end": {t_end}, "n_points": 40, "seed": 3, {state_and_mode}{extra}}}"#
    )
}

fn run(cmd: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(BIN)
        .arg(cmd)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn reports(path: &Path) -> Vec<Value> {
    serde_json::from_str::<Value>(&std::fs::read_to_string(path).unwrap())
        .unwrap()
        .as_array()
        .unwrap()
        .clone()
}

#[test]
fn exit_code_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let circular = r#""initial_state": [1.0, 0.0, 0.0, 0.0, 1.0, 0.0], "mode": "cartesian""#;
    let cases: Vec<(&str, String, i32)> = vec![
        ("verify", standard(1.0, 1.0, CARTESIAN, ""), 0),
        ("verify", standard(1.0, 1.0, EQUATORIAL, ""), 0),
        ("verify", standard(2.0, 1.0, r#""initial_state": [1.0, 0.2, 1.3, 0.8], "mode": "action-angle""#, ""), 0),
        ("verify", standard(0.5, 1.0, CARTESIAN, ""), 2),
        (
            "verify",
            r#"{"alpha": 1.0, "m": 1.0, "k": 1.0, "t_end": 1.0, "n_points": 0, "initial_state": [1.0, 0.2, 1.3, 0.8], "mode": "equatorial"}"#.into(),
            2,
        ),
        ("verify", standard(1.0, 1.0, EQUATORIAL, r#", "seed": 9"#), 2),
        ("verify", "{ not json".into(), 2),
        ("verify", standard(1.0, 1.0, r#""initial_state": [1.0, 2.0], "mode": "cartesian""#, ""), 2),
        ("verify", standard(1.0, 1.0, CARTESIAN, r#", "rel_tol": 1e-2"#), 2),
        ("simulate", standard(1.0, std::f64::consts::TAU, circular, ""), 0),
        ("simulate", standard(1.5, 5.0, CARTESIAN, ""), 0),
        ("simulate", standard(0.8, 5.0, CARTESIAN, ""), 2),
        ("simulate", standard(1.0, 2.0, EQUATORIAL, ""), 0),
        // loose integration judged at the tightest drift tolerance
        ("simulate", standard(1.0, 20.0, circular, r#", "rel_tol": 1e-3, "drift_tol": 1e-13"#), 1),
        ("actions", standard(1.0, 5.0, EQUATORIAL, ""), 0),
        ("actions", standard(1.0, 5.0, r#""initial_state": [1.0, 0.0, 0.0, 0.0, 0.9, 0.2], "mode": "cartesian""#, ""), 0),
        ("actions", standard(1.0, 5.0, r#""initial_state": [1.0, 0.0, 0.0, 0.0, 2.0, 0.0], "mode": "cartesian""#, ""), 2),
        ("actions", standard(1.0, 5.0, r#""initial_state": [1.0, 1.5, 1.3, 0.8], "mode": "equatorial""#, ""), 2),
        ("actions", standard(1.5, 5.0, CARTESIAN, ""), 2),
    ];
    for (i, (cmd, body, want)) in cases.iter().enumerate() {
        let cfg = config(d, &format!("case{i}"), body);
        let o = run(cmd, &cfg, &d.join(format!("out{i}")), &[]);
        assert_eq!(
            code(&o),
            *want,
            "case {i} ({cmd}): {body}\n{}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn missing_config_and_fields_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("verify", &dir.path().join("absent.json"), dir.path(), &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read config"));
    let cfg = config(
        dir.path(),
        "nophys",
        r#"{"alpha": 1.0, "k": 1.0, "initial_state": [1,1,1,1], "t_end": 1, "mode": "equatorial"}"#,
    );
    assert_eq!(code(&run("verify", &cfg, dir.path(), &[])), 2);
}

#[test]
fn singular_alpha_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c", &standard(0.5, 1.0, CARTESIAN, ""));
    let o = run("verify", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("singular"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn verify_report_schema_and_json_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c", &standard(1.25, 1.0, EQUATORIAL, ""));
    let out = dir.path().join("out");
    let o = run("verify", &cfg, &out, &["--json"]);
    assert_eq!(code(&o), 0);
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["command"], "verify");
    assert_eq!(summary["pass"], true);
    let recs = reports(&out.join("report.json"));
    assert!(!recs.is_empty());
    for r in &recs {
        let mut keys: Vec<&str> = r.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            [
                "alpha",
                "identity",
                "max_residual",
                "mean_residual",
                "n_points",
                "pass",
                "tol"
            ]
        );
        assert_eq!(r["alpha"], 1.25);
        assert_eq!(r["n_points"], 40);
    }
}

#[test]
fn circular_orbit_closes_with_small_drift() {
    let dir = tempfile::tempdir().unwrap();
    let body = standard(
        1.0,
        std::f64::consts::TAU,
        r#""initial_state": [1.0, 0.0, 0.0, 0.0, 1.0, 0.0], "mode": "cartesian""#,
        "",
    );
    let cfg = config(dir.path(), "c", &body);
    let out = dir.path().join("out");
    assert_eq!(code(&run("simulate", &cfg, &out, &[])), 0);
    for r in reports(&out.join("conservation.json")) {
        assert!(r["max_residual"].as_f64().unwrap() < 1e-8, "{r}");
    }
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,q1,q2,q3,p1,p2,p3,H,L1,L2,L3,A1,A2,A3\n"));
    let last: Vec<f64> = csv
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    let start = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0];
    for i in 0..6 {
        assert!((last[i + 1] - start[i]).abs() < 1e-7, "component {i}: {}", last[i + 1]);
    }
}

#[test]
fn orthant_arc_stops_at_event() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c", &standard(1.5, 50.0, CARTESIAN, ""));
    let out = dir.path().join("out");
    assert_eq!(code(&run("simulate", &cfg, &out, &[])), 0);
    let events: Value = serde_json::from_str(&std::fs::read_to_string(out.join("events.json")).unwrap()).unwrap();
    let ev = &events.as_array().unwrap()[0];
    assert_eq!(ev["kind"], "hyperplane-approach");
    let t_event = ev["t"].as_f64().unwrap();
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let t_last: f64 = csv.lines().last().unwrap().split(',').next().unwrap().parse().unwrap();
    assert_eq!(t_last, t_event);
    assert!(t_last < 50.0);
}

#[test]
fn zero_horizon_writes_single_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c", &standard(1.0, 0.0, EQUATORIAL, ""));
    let out = dir.path().join("out");
    assert_eq!(code(&run("simulate", &cfg, &out, &[])), 0);
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,r,pr,phi,pphi,H,Theta,Bs,Bb");
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn circular_equatorial_actions_report_zero_j1() {
    let dir = tempfile::tempdir().unwrap();
    let theta = 1.2f64;
    let body = standard(
        1.0,
        3.0,
        &format!(
            r#""initial_state": [{}, 0.0, 1.5707963267948966, {theta}], "mode": "action-angle""#,
            theta * theta
        ),
        "",
    );
    let cfg = config(dir.path(), "c", &body);
    let out = dir.path().join("out");
    assert_eq!(code(&run("actions", &cfg, &out, &[])), 0);
    let csv = std::fs::read_to_string(out.join("actions.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,J1,J2,I1,I2");
    for line in csv.lines().skip(1) {
        let j1: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(j1.abs() < 1e-10, "{j1}");
    }
}

fn outputs_identical(cmd: &str, body: &str, files: &[&str], extra: &[&str]) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c", body);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&run(cmd, &cfg, &a, extra)), 0);
    assert_eq!(code(&run(cmd, &cfg, &b, extra)), 0);
    for f in files {
        let (x, y) = (std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
        assert!(!x.is_empty());
        assert_eq!(x, y, "{cmd}: {f} differs");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    outputs_identical(
        "verify",
        &standard(1.5, 1.0, CARTESIAN, ""),
        &["report.json"],
        &["--seed", "42"],
    );
    outputs_identical(
        "simulate",
        &standard(1.5, 5.0, CARTESIAN, ""),
        &["trajectory.csv", "conservation.json", "events.json"],
        &[],
    );
    outputs_identical(
        "actions",
        &standard(1.0, 5.0, EQUATORIAL, ""),
        &["actions.csv", "drift.json"],
        &[],
    );
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c", &standard(1.5, 1.0, EQUATORIAL, ""));
    let read = |seed: &str| {
        let out = dir.path().join(seed);
        assert_eq!(code(&run("verify", &cfg, &out, &["--seed", seed])), 0);
        std::fs::read(out.join("report.json")).unwrap()
    };
    assert_ne!(read("1"), read("2"));
}
