use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn g2flow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_g2flow")).args(args).output().expect("run g2flow")
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn last_row(csv: &Path) -> Vec<f64> {
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,a,b,lambda,T_minus_t_times_lambda"));
    // The last column is empty when there is no finite blow-up time.
    lines.last().unwrap().split(',').take(3).map(|v| v.parse().unwrap()).collect()
}

#[test]
fn unmodified_flow_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("a0.csv");
    let out = g2flow(&["flow", "--epsilon", "1", "--A", "0", "--t-end", "0.19", "-o", path_str(&csv)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let row = last_row(&csv);
    assert_eq!(row[0], 0.19);
    assert!((row[2] - (1.0f64 - 5.0 * 0.19).powf(0.1)).abs() < 1e-8);
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a0.summary.json")).unwrap()).unwrap();
    assert_eq!(summary, json_stdout(&out));
    assert_eq!(summary["regime"], "collapse");
    assert_eq!(summary["T_max"], 0.2);
    assert_eq!(summary["type"], "Type I");
}

#[test]
fn summary_regimes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let out = g2flow(&["flow", "--epsilon", "1", "--A", "1", "-o", path_str(&csv)]);
    assert_eq!(json_stdout(&out)["regime"], "constant");
    let out = g2flow(&["flow", "--epsilon", "1", "--A", "2", "--t-end", "5", "-o", path_str(&csv)]);
    let s = json_stdout(&out);
    assert_eq!(s["regime"], "monotonically increasing");
    assert_eq!(s["T_max"], "infinity");
    assert_eq!(s["type"], "none");
}

#[test]
fn classify_rows() {
    let c = json_stdout(&g2flow(&["classify", "--epsilon", "1", "--A", "0"]));
    assert_eq!(c["regime"], "collapse");
    assert_eq!(c["blowup_time"], 0.2);
    assert_eq!(json_stdout(&g2flow(&["classify", "--epsilon", "1", "--A", "1"]))["regime"], "constant");
    let neg = json_stdout(&g2flow(&["classify", "--epsilon", "1", "--A", "-1"]));
    assert_eq!(neg["monotonicity"], "decreasing");
    assert!(neg["steady_state"].is_null());
    assert_eq!(neg["formal_steady_state"], -1.0);
    assert_eq!(g2flow(&["classify", "--epsilon", "0", "--A", "1"]).status.code(), Some(2));
}

#[test]
fn csv_round_trip_reproduces_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    for (eps, a) in [("1", "0"), ("1", "0.5"), ("1", "2"), ("0.5", "-0.5"), ("2", "2")] {
        let csv = dir.path().join(format!("{eps}_{a}.csv"));
        let flow = json_stdout(&g2flow(&["flow", "--epsilon", eps, "--A", a, "--t-end", "3", "-o", path_str(&csv)]));
        let back = json_stdout(&g2flow(&["classify", "--from-csv", path_str(&csv)]));
        assert_eq!(flow["regime"], back["regime"], "{eps} {a}");
        assert_eq!(flow["type"], back["type"], "{eps} {a}");
        match (flow["T_max"].as_f64(), back["T_max"].as_f64()) {
            (Some(x), Some(y)) => assert!(((x - y) / x).abs() < 1e-6, "{x} vs {y}"),
            _ => assert_eq!(flow["T_max"], back["T_max"]),
        }
    }
}

#[test]
fn verify_suites_report_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("g2.json");
    let out = g2flow(&["verify", "g2", "--cases", "10", "--seed", "17", "-o", path_str(&report)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["seed"], 17);
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["status"] == "pass" && c["reference"].is_string()));
    assert!(g2flow(&["verify", "algebra"]).status.success());
    assert!(g2flow(&["verify", "ode"]).status.success());
}

#[test]
fn failing_check_exits_one_and_still_writes_report() {
    // The stated broken-Sasakian τ0 formula assumes ω′ = dη and fails on a real deformation.
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    std::fs::write(&config, r#"{"model": "broken-sasakian", "amplitude": 0.05, "seed": 3}"#).unwrap();
    let report = dir.path().join("torus.json");
    let out = g2flow(&["verify", "torus", "--config", path_str(&config), "-o", path_str(&report)]);
    assert_eq!(out.status.code(), Some(1));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let check = |id: &str| r["checks"].as_array().unwrap().iter().find(|c| c["check_id"] == id).cloned().unwrap();
    assert_eq!(check("broken.tau0")["status"], "fail");
    assert_eq!(check("broken.tau0_trace")["status"], "pass");
    assert!(r["checks"].as_array().unwrap().iter().all(|c| !c["check_id"].as_str().unwrap().starts_with("ccy.")));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(&config, r#"{"epsilon": 1, "A": 0, "epsilom": 2}"#).unwrap();
    let out = g2flow(&["flow", "--config", path_str(&config)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("epsilom") && err.contains("config.schema.json"), "{err}");
    assert_eq!(g2flow(&["flow", "--epsilon", "1"]).status.code(), Some(2));
    assert_eq!(g2flow(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn config_file_values_are_used() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("f.csv");
    let config = dir.path().join("c.json");
    std::fs::write(
        &config,
        format!(r#"{{"epsilon": 2, "A": 4, "t_end": 0.5, "output_path": {:?}}}"#, path_str(&csv)),
    )
    .unwrap();
    let out = g2flow(&["flow", "--config", path_str(&config)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(last_row(&csv)[0], 0.5);
    assert_eq!(json_stdout(&out)["params"]["epsilon"], 2.0);
}

#[test]
fn sweep_covers_the_default_grid() {
    let out = g2flow(&["sweep", "--t-end", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let entries = json_stdout(&out);
    let entries = entries.as_array().unwrap();
    assert_eq!(entries.len(), 15);
    for e in entries {
        let infinite = e["T_max"] == "infinity";
        let growing = e["regime"] == "constant" || e["regime"] == "monotonically increasing";
        assert_eq!(infinite, growing, "{e}");
    }
    let custom = json_stdout(&g2flow(&["sweep", "--epsilons", "1", "--A-values", "-1,0.5"]));
    assert_eq!(custom.as_array().unwrap().len(), 2);
}

#[test]
fn thread_override() {
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_g2flow"))
            .args(["classify", "--epsilon", "1", "--A", "1"])
            .env("G2FLOW_THREADS", v)
            .output()
            .unwrap()
    };
    assert!(run("1").status.success());
    assert_eq!(run("many").status.code(), Some(2));
}
