use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_instanton"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn stderr_line(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stderr).into_owned();
    assert_eq!(text.lines().count(), 1, "{text}");
    text
}

#[test]
fn spectrum_levels_and_metadata() {
    let doc = json(&["spectrum", "--omega", "10", "--format", "json"]);
    let levels: Vec<f64> = doc["result"]["levels"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    for (got, want) in levels.iter().zip([6.3042, 7.5, 8.6958]) {
        assert!((got - want).abs() < 5e-5, "{levels:?}");
    }
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["command"], "spectrum");
    assert!(doc["normalization"]
        .as_str()
        .unwrap()
        .contains("x^2 (x^2 - 1)^2"));
    // defaults are echoed
    assert_eq!(doc["parameters"]["T"].as_f64(), Some(3.0));
    assert_eq!(doc["parameters"]["nu"].as_f64(), Some(15.0));
    assert_eq!(doc["parameters"]["N"], 4000);
}

#[test]
fn profile_csv_passes_through_the_midpoint() {
    let out = run(&["profile", "--omega", "1", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next(), Some("tau,x,dxdtau"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 201);
    let mid = rows.iter().find(|r| r[0] == 0.0).expect("tau = 0 sampled");
    assert!((mid[1] - 0.70711).abs() < 5e-6);
    assert!((mid[2] - 0.5 * 0.5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn numeric_profile_matches_closed_form() {
    let closed = json(&["profile", "--omega", "2", "--samples", "41"]);
    let numeric = json(&["profile", "--omega", "2", "--samples", "41", "--numeric"]);
    let a = closed["result"]["x"].as_array().unwrap();
    let b = numeric["result"]["x"].as_array().unwrap();
    for (p, q) in a.iter().zip(b) {
        assert!((p.as_f64().unwrap() - q.as_f64().unwrap()).abs() < 1e-8);
    }
}

#[test]
fn validation_failures_exit_one() {
    for args in [
        &["spectrum", "--omega", "-1"][..],
        &["spectrum", "--omega", "0"],
        &["determinant", "--T", "nan"],
        &["spectrum", "--format", "xml"],
        &["sweep", "--omega-range", "4:30"],
        &["nonsense"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(
            stderr_line(&out).starts_with("error: validation:"),
            "{args:?}"
        );
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn numeric_failures_exit_two_and_name_the_operation() {
    let out = run(&["determinant", "--omega", "1", "--T", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let line = stderr_line(&out);
    assert!(
        line.starts_with("error: numeric: determinant_report: BoxTooSmall:"),
        "{line}"
    );

    let out = run(&["oracle", "--N", "50"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_line(&out).contains("diagonalize: InvalidGrid"));
}

#[test]
fn help_and_version_succeed() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    let help = String::from_utf8(out.stdout).unwrap();
    assert!(help.contains("[default: 30/omega]") && help.contains("[default: 3*omega/2]"));
    assert!(run(&["--version"]).status.success());
}

#[test]
fn sweep_is_ordered_and_deterministic() {
    let args = ["sweep", "--omega-range", "4:30:2", "--format", "csv"];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let omegas: Vec<f64> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    let expected: Vec<f64> = (0..14).map(|i| 4.0 + 2.0 * i as f64).collect();
    assert_eq!(omegas, expected);
}

#[test]
fn density_sweep_columns() {
    let out = run(&["density", "--sweep", "4:8:2", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "omega,action,density,E0,E1,E2");
    assert_eq!(body.len(), 4);
}

#[test]
fn compare_reports_all_three_levels() {
    let doc = json(&["compare", "--omega", "12"]);
    let r = &doc["result"];
    assert_eq!(r["exact_parities"][0], "Even");
    assert_eq!(r["exact_parities"][1], "Odd");
    assert_eq!(r["differences"].as_array().unwrap().len(), 3);
}

#[test]
fn determinant_round_trips_through_selftest() {
    let dir = std::env::temp_dir().join(format!("instanton-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("determinant.json");
    let p = path.to_str().unwrap();
    let out = run(&["determinant", "--omega", "2", "--T", "12", "--out", p]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out.stdout.is_empty());
    let doc = json(&["selftest", "--check-file", p]);
    assert_eq!(doc["result"]["passed"], true);

    // a tampered identity is caught
    let mut saved: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let raw = saved["result"]["raw_ratio"].as_f64().unwrap();
    saved["result"]["raw_ratio"] = Value::from(raw * (1.0 + 1e-9));
    std::fs::write(&path, serde_json::to_string(&saved).unwrap()).unwrap();
    let out = run(&["selftest", "--check-file", p]);
    assert_eq!(out.status.code(), Some(2));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["result"]["passed"], false);

    let out = run(&[
        "selftest",
        "--check-file",
        dir.join("missing.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn selftest_passes() {
    let out = run(&["selftest"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}
