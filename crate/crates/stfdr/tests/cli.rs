use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn stfdr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stfdr"))
        .arg("--quiet")
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn worked_file(dir: &TempDir) -> String {
    let path = dir.path().join("p.txt");
    std::fs::write(&path, "# worked example\n0.01\n0.02\n0.02\n0.9\n").unwrap();
    path.to_str().unwrap().to_string()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn adjust_worked_example() {
    let dir = TempDir::new().unwrap();
    let input = worked_file(&dir);
    let csv = dir.path().join("d.csv");
    let out = stfdr(&[
        "adjust",
        "--input",
        &input,
        "--alpha",
        "0.1",
        "--csv",
        path_str(&csv),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    assert!((v["threshold"].as_f64().unwrap() - 0.15).abs() < 1e-15);
    assert_eq!(v["pi0"].as_f64().unwrap(), 0.5);
    assert_eq!(v["n_rejected"], 3);
    assert_eq!(v["exhausted"], true);
    assert_eq!(v["rejected_indices"], serde_json::json!([0, 1, 2]));
    let csv = std::fs::read_to_string(csv).unwrap();
    assert_eq!(
        csv,
        "index,p_value,rejected\n0,0.01,true\n1,0.02,true\n2,0.02,true\n3,0.9,false\n"
    );
}

#[test]
fn adjust_alpha_zero_rejects_nothing() {
    let dir = TempDir::new().unwrap();
    let input = worked_file(&dir);
    let out = stfdr(&["adjust", "--input", &input, "--alpha", "0", "--pi0", "one"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["threshold"].as_f64().unwrap(), 0.0);
    assert_eq!(v["n_rejected"], 0);
}

#[test]
fn bad_inputs_exit_with_code_2() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "# nothing\n").unwrap();
    let out = stfdr(&["adjust", "--input", path_str(&empty), "--alpha", "0.1"]);
    assert_eq!(out.status.code(), Some(2));

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "0.1\n1.2\n").unwrap();
    let out = stfdr(&["adjust", "--input", path_str(&bad), "--alpha", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let input = worked_file(&dir);
    let out = stfdr(&["adjust", "--input", &input, "--alpha", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = stfdr(&[
        "adjust", "--input", &input, "--alpha", "0.1", "--pi0", "storey:1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn trace_reports_jump_table() {
    let dir = TempDir::new().unwrap();
    let input = worked_file(&dir);
    let out = stfdr(&["trace", "--input", &input, "--process", "L"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["kind"], "piecewise-linear");
    let jumps = v["jumps"].as_array().unwrap();
    let at = |loc: f64| {
        jumps
            .iter()
            .find(|j| j["location"].as_f64() == Some(loc))
            .unwrap()["size"]
            .as_f64()
            .unwrap()
    };
    assert!((at(0.02) - 0.0133333333333333).abs() < 1e-12);
    assert!((at(0.9) - 0.075).abs() < 1e-12);
}

#[test]
fn fdr_trace_is_scaled_l() {
    let dir = TempDir::new().unwrap();
    let input = worked_file(&dir);
    let l = json(&stfdr(&[
        "trace",
        "--input",
        &input,
        "--process",
        "L",
        "--samples",
        "3",
    ]));
    let f = json(&stfdr(&[
        "trace",
        "--input",
        &input,
        "--process",
        "FDR",
        "--pi0",
        "one",
        "--samples",
        "3",
    ]));
    assert_eq!(l["breakpoints"], f["breakpoints"]);
    let lv = l["values"].as_array().unwrap();
    let fv = f["values"].as_array().unwrap();
    for (a, b) in lv.iter().zip(fv) {
        let expected = (4.0 * a.as_f64().unwrap()).min(1.0);
        assert!((b.as_f64().unwrap() - expected).abs() < 1e-15);
    }
}

#[test]
fn trace_csv_output() {
    let dir = TempDir::new().unwrap();
    let input = worked_file(&dir);
    let out = stfdr(&[
        "trace",
        "--input",
        &input,
        "--process",
        "R",
        "--samples",
        "1",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "t,value\n0,0\n0.01,1\n0.02,3\n0.9,4\n"
    );
}

#[test]
fn counterexample_reports_negative_delta() {
    let out = stfdr(&["counterexample"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!(v["delta"].as_f64().unwrap() < 0.0);
    assert_eq!(v["values"], serde_json::json!([0.1, 0.2, 0.2, 0.3, 0.9]));
    let out = stfdr(&["counterexample", "--n", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_passes_on_small_battery() {
    let out = stfdr(&["check", "--seed", "3", "--battery", "100"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    assert_eq!(json(&out)["passed"], true);
}

#[test]
fn simulate_replays_byte_identically() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("sim.json");
    let out = stfdr(&[
        "simulate",
        "--m",
        "40",
        "--reps",
        "300",
        "--seed",
        "11",
        "--output",
        path_str(&report),
    ]);
    assert!(out.status.success());
    let again = dir.path().join("again.json");
    let out = stfdr(&[
        "replay",
        "--manifest",
        path_str(&report),
        "--verify",
        path_str(&report),
        "--output",
        path_str(&again),
    ]);
    assert!(out.status.success());
    assert_eq!(
        std::fs::read(&report).unwrap(),
        std::fs::read(&again).unwrap()
    );
}

#[test]
fn replay_refuses_changed_input() {
    let dir = TempDir::new().unwrap();
    let input = worked_file(&dir);
    let report = dir.path().join("adj.json");
    let out = stfdr(&[
        "adjust",
        "--input",
        &input,
        "--alpha",
        "0.1",
        "--output",
        path_str(&report),
    ]);
    assert!(out.status.success());
    std::fs::write(&input, "0.5\n").unwrap();
    let out = stfdr(&["replay", "--manifest", path_str(&report)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_from_environment() {
    let run = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_stfdr"))
            .args(["--quiet", "simulate", "--m", "20", "--reps", "50"])
            .env("STFDR_SEED", seed)
            .output()
            .unwrap()
    };
    let a = json(&run("5"));
    assert_eq!(a["manifest"]["parameters"]["seed"], 5);
    assert_eq!(a, json(&run("5")));
}
