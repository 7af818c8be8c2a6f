use std::process::{Command, Output};

use tribody::harness::Scenario;
use tribody::trajectory::Mode;

fn tribody(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tribody")).args(args).output().expect("tribody runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn lambertw_prints_value_and_residual() {
    let o = tribody(&["lambertw", "lower", "-0.1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let w: f64 = lines[0].strip_prefix("w = ").unwrap().parse().unwrap();
    assert!((w * w.exp() + 0.1).abs() < 1e-16);
    assert!(lines[1].starts_with("residual = "));

    assert_eq!(tribody(&["lambertw", "principal", "0"]).status.code(), Some(0));
    assert_eq!(tribody(&["lambertw", "sideways", "0"]).status.code(), Some(4));
    assert_eq!(tribody(&["lambertw", "principal", "-1"]).status.code(), Some(3));
}

#[test]
fn demo_goes_to_stdout() {
    let o = tribody(&["demo"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(Scenario::from_json(&stdout(&o)).unwrap(), Scenario::demo());
}

#[test]
fn validate_prints_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("demo.json");
    std::fs::write(&path, Scenario::demo().to_json()).unwrap();
    let o = tribody(&["validate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["validity"]["b_positive"], serde_json::json!([true, true, true]));
    assert_eq!(v["params"][0]["a_const"], 6.0);
}

#[test]
fn compare_writes_both_trajectories_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let mut sc = Scenario::demo();
    sc.solver.samples = 11;
    let path = dir.path().join("sc.json");
    std::fs::write(&path, sc.to_json()).unwrap();
    let out = dir.path().join("cmp");
    let o = tribody(&[
        "compare",
        "--scenario",
        path.to_str().unwrap(),
        "--modes",
        "semi_analytic,oracle_newton",
        "--threshold",
        "0.5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["semi_analytic.csv", "oracle_newton.csv", "report.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let bodies = report["metrics"]["bodies"].as_array().unwrap();
    assert_eq!(bodies.len(), 3);
    for b in bodies {
        assert!(b["rms_position_error"].as_f64().unwrap() <= b["max_position_error"].as_f64().unwrap());
    }
    assert_eq!(report["runs"][1]["mode"], "oracle_newton");
}

#[test]
fn bad_inputs_exit_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    assert_eq!(tribody(&["solve", "--scenario", "/nonexistent.json", "--out", out]).status.code(), Some(4));
    assert_eq!(tribody(&["frobnicate"]).status.code(), Some(4));

    let mut v: serde_json::Value = serde_json::from_str(&Scenario::demo().to_json()).unwrap();
    v["solver"]["colour"] = "blue".into();
    let path = dir.path().join("extra.json");
    std::fs::write(&path, v.to_string()).unwrap();
    assert_eq!(tribody(&["validate", "--scenario", path.to_str().unwrap()]).status.code(), Some(4));

    let mut sc = Scenario::demo();
    sc.solver.mode = Mode::SurrogateFull;
    let path = dir.path().join("surrogate.json");
    std::fs::write(&path, sc.to_json()).unwrap();
    assert_eq!(tribody(&["solve", "--scenario", path.to_str().unwrap(), "--out", out]).status.code(), Some(4));
    assert_eq!(tribody(&["integrate", "--scenario", path.to_str().unwrap(), "--out", out]).status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("o/trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 101);
}
