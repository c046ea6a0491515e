use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn prevision(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prevision"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn output<'a>(report: &'a Value, check: &str, key: &str) -> &'a Value {
    let c = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["id"] == check)
        .unwrap();
    &c["outputs"][key]
}

#[test]
fn list_names_every_scenario() {
    let o = prevision(&["list"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(
        text.contains("ex2_dubins \u{2014} Example 2 (Dubins)"),
        "{text}"
    );
    for id in [
        "ex1_abstain",
        "ex3_purely_fa_brier",
        "ctrex_thm1_spread",
        "ctrex_thm2_similarity",
        "control_ca",
    ] {
        assert!(text.contains(id), "{id} missing");
    }
}

#[test]
fn unknown_scenario_is_a_usage_error() {
    let o = prevision(&["run", "no_such_scenario"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no_such_scenario"));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(
        prevision(&["run", "ex2_dubins", "--depth", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        prevision(&["run", "ex2_dubins", "--safety", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        prevision(&["run", "ex2_dubins", "--grid", "x"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        prevision(&["run", "ex1_abstain", "--param", "c=2"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn dubins_run_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (out, csv) = (
        dir.path().join("report.json"),
        dir.path().join("states.csv"),
    );
    let o = prevision(&[
        "run",
        "ex2_dubins",
        "--depth",
        "8",
        "--out",
        out.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(
        stdout(&o).contains("PASS: 16 passed, 0 failed"),
        "{}",
        stdout(&o)
    );
    let r = report(&out);
    assert_eq!(r["result"], "PASS");
    assert_eq!(r["depth"], 8);
    assert_eq!(output(&r, "hand_picked_rival", "epsilon")["exact"], "1/8");
    assert_eq!(
        output(&r, "hand_picked_rival", "epsilon")["decimal"],
        "0.125"
    );
    let table = fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().count(), 1 + 2 * (8 + 1));
    assert!(table.lines().any(|l| l.starts_with("2,tail,")));
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(leftovers.len(), 2, "{leftovers:?}");
}

#[test]
fn scenario_parameters_reach_the_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = prevision(&[
        "run",
        "ex1_abstain",
        "--param",
        "c=1/4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(output(&report(&out), "abstain", "epsilon")["exact"], "3/4");
}

#[test]
fn float_mode_runs() {
    let o = prevision(&[
        "run",
        "ctrex_thm1_spread",
        "--mode",
        "float",
        "--sequential",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("(float, depth 64)"));
}

#[test]
fn export_then_check_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("dubins.json");
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    assert_eq!(
        prevision(&["export", "ex2_dubins", "--out", spec.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        prevision(&["run", "ex2_dubins", "--out", a.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        prevision(&[
            "check",
            spec.to_str().unwrap(),
            "--out",
            b.to_str().unwrap()
        ])
        .status
        .code(),
        Some(0)
    );
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

fn edited_spec(dir: &Path, edit: impl FnOnce(&mut Value)) -> String {
    let o = prevision(&["export", "ex2_dubins"]);
    let mut v: Value = serde_json::from_slice(&o.stdout).unwrap();
    edit(&mut v);
    let path = dir.join("edited.json");
    fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn unnormalized_charge_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited_spec(dir.path(), |v| {
        v["charge"][0]["diffuse"] = Value::String("9/10".into())
    });
    let o = prevision(&["check", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("normalization"), "{}", stderr(&o));
}

#[test]
fn unknown_rule_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited_spec(dir.path(), |v| {
        v["systems"][0]["entries"][0]["rule"] = Value::String("nope".into())
    });
    let o = prevision(&["check", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unresolved"), "{}", stderr(&o));
}

#[test]
fn failing_expectation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited_spec(dir.path(), |v| {
        let checks = v["checks"].as_array_mut().unwrap();
        let c = checks
            .iter_mut()
            .find(|c| c["id"] == "probability_F")
            .unwrap();
        c["expect"][0]["value"] = Value::String("1/3".into());
    });
    let o = prevision(&["check", &path]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL probability_F"), "{}", stdout(&o));
}

#[test]
fn malformed_json_reports_a_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    fs::write(&path, "{\n  \"name\": }").unwrap();
    let o = prevision(&["check", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}
