use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn manyshap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_manyshap"))
        .args(args)
        .env_remove("MANYSHAP_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn every_scenario_passes() {
    let o = manyshap(&["scenario", "all"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("19 of 19 scenarios passed"));
}

#[test]
fn integrated_gradients_on_the_cube() {
    let dir = tempdir().unwrap();
    let model = dir.path().join("cube.json");
    fs::write(&model, r#"{"type":"expression","expr":"(x1 + x2)^3"}"#).unwrap();
    let o = manyshap(&[
        "attribute",
        "--method",
        "ig",
        "--model",
        model.to_str().unwrap(),
        "--baseline",
        "zeros",
        "--explicand",
        "5,1",
        "--steps",
        "300",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["scores"]["x1"].as_f64().unwrap() - 180.0).abs() < 1e-3);
    assert!((v["scores"]["x2"].as_f64().unwrap() - 36.0).abs() < 1e-3);
    let named = manyshap(&[
        "attribute",
        "--method",
        "bshap",
        "--model",
        model.to_str().unwrap(),
        "--baseline",
        "zeros",
        "--explicand",
        "x2=1,x1=5",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&named)).unwrap();
    assert_eq!(v["scores"]["x1"].as_f64(), Some(170.0));
    assert_eq!(v["scores"]["x2"].as_f64(), Some(46.0));
}

#[test]
fn diabetes_row_defaults_to_the_mean_baseline() {
    let o = manyshap(&["attribute", "--explicand", "row:0", "--format", "text"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("age ") && l.trim_end().ends_with(" 0.0")), "{text}");
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> =
        fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    names
}

#[test]
fn cohort_writes_two_files_per_format() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("report");
    let o = manyshap(&["cohort", "--method", "bshap,ces", "--count", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let files = files_in(&out);
    for ext in ["csv", "json", "svg"] {
        assert_eq!(files.iter().filter(|f| f.ends_with(ext)).count(), 2, "{files:?}");
    }
}

#[test]
fn cohort_output_directory_comes_from_the_environment() {
    let dir = tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_manyshap"))
        .args(["cohort", "--method", "bshap", "--rows", "1,2", "--format", "csv"])
        .env("MANYSHAP_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(files_in(dir.path()), vec!["scores_bshap.csv"]);
}

#[test]
fn smoothing_sweep_expands_ces_empirical() {
    let dir = tempdir().unwrap();
    let o = manyshap(&[
        "cohort",
        "--method",
        "ces_empirical",
        "--smoothing",
        "0,0.1",
        "--rows",
        "3",
        "--format",
        "json",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files_in(dir.path()), vec!["summary_ces_empirical.json", "summary_ces_empirical_0-1.json"]);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(manyshap(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(manyshap(&["attribute", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(manyshap(&["scenario", "no-such-scenario"]).status.code(), Some(2));
    assert_eq!(manyshap(&["attribute", "--explicand", "1,2"]).status.code(), Some(2));
    assert_eq!(
        manyshap(&["attribute", "--explicand", "row:0", "--method", "bshap", "--steps", "3"]).status.code(),
        Some(2)
    );
}

#[test]
fn failed_axiom_check_exits_one() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("symmetry.json");
    fs::write(
        &path,
        r#"{
          "models": ["x + y"],
          "explicands": [{"x": 2, "y": 2}],
          "baseline": {"x": 1, "y": 1},
          "distribution": {"type": "explicit", "rows": [
            {"values": {"x": 1, "y": 1}, "prob": 0.3},
            {"values": {"x": 2, "y": 2}, "prob": 0.4},
            {"values": {"x": 1, "y": 2}, "prob": 0.3}
          ]},
          "pair": ["x", "y"]
        }"#,
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let ces = manyshap(&["check", "symmetry", "--method", "ces", "--instance", p]);
    assert_eq!(ces.status.code(), Some(1));
    assert!(stdout(&ces).starts_with("symmetry / ces: FAIL"));
    let bshap = manyshap(&["check", "symmetry", "--method", "bshap", "--instance", p, "--format", "json"]);
    assert_eq!(bshap.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&bshap)).unwrap();
    assert_eq!(v["verdict"], "pass");
    let missing = manyshap(&["check", "dummy", "--method", "ces", "--instance", p]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn oracle_reproduces_the_bundled_golden_file() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("golden.json");
    let o = manyshap(&["oracle", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let bundled = Path::new(env!("CARGO_MANIFEST_DIR")).join("../harness/data/golden.json");
    assert_eq!(fs::read_to_string(out).unwrap(), fs::read_to_string(bundled).unwrap());
    let again =
        manyshap(&["scenario", "symmetry-failure", "--golden", dir.path().join("golden.json").to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0));
}

#[test]
fn tampered_golden_file_fails_the_gate() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("golden.json");
    let bundled =
        fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../harness/data/golden.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&bundled).unwrap();
    let entry = v["entries"]
        .as_array_mut()
        .unwrap()
        .iter_mut()
        .find(|e| e["scenario"] == "symmetry-failure" && e["key"] == "ces.x")
        .unwrap();
    entry["expected"] = serde_json::json!(0.55);
    fs::write(&path, v.to_string()).unwrap();
    let o = manyshap(&["scenario", "symmetry-failure", "--golden", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}
