use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ball-accel"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn write_logistic_csv(path: &Path) {
    let mut text = String::from("x1,x2,x3,y\n");
    for i in 0..30 {
        let (x1, x2, x3) = ((i as f64 * 0.37).sin(), (i as f64 * 0.91).cos(), (i % 5) as f64 / 5.0 - 0.4);
        let y = if x1 - 0.5 * x2 + 0.3 * x3 + 0.1 * ((i * 7) % 3) as f64 > 0.05 { 1 } else { -1 };
        text.push_str(&format!("{x1},{x2},{x3},{y}\n"));
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn logistic_csv_report_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let out = dir.path().join("r.json");
    let trace = dir.path().join("t.csv");
    write_logistic_csv(&data);
    let o = run(&[
        "solve",
        "logistic",
        "--data",
        data.to_str().unwrap(),
        "--radius",
        "4",
        "--out",
        out.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rep["schema_version"], 1);
    assert_eq!(rep["task"], "logistic");
    let records = rep["trace"].as_array().unwrap();
    assert_eq!(records.len() as u64, rep["iterations"].as_u64().unwrap());
    let sum = |key: &str| records.iter().map(|r| r[key].as_u64().unwrap()).sum::<u64>();
    assert_eq!(sum("oracle_calls"), rep["oracle_calls"].as_u64().unwrap());
    assert_eq!(sum("solves"), rep["solves"].as_u64().unwrap());
    assert!(rep["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(rep["result"]["x"].as_array().unwrap().len(), 3);

    let csv = std::fs::read_to_string(&trace).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,f,f_gap,movement,cumulative_solves"));
    assert_eq!(lines.count(), records.len());
}

#[test]
fn reports_are_deterministic() {
    let args = ["solve", "logistic", "--rows", "30", "--cols", "3", "--radius", "2", "--seed", "4"];
    let mut a = json(&run(&args));
    let mut b = json(&run(&args));
    for v in [&mut a, &mut b] {
        v.as_object_mut().unwrap().remove("wall_time_s");
    }
    assert_eq!(a, b);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["solve", "logistic", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["bench", "scaling", "--radii", "4,8", "--ratios", "8,16"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
}

#[test]
fn malformed_csv_gives_json_error_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(&data, "a,b,y\n1,2,0\n3,4\n").unwrap();
    let o = run(&["solve", "logistic", "--data", data.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let doc = json(&o);
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["error"]["kind"], "data");
    assert_eq!(doc["error"]["line"], 3);

    let o = run(&["solve", "logistic", "--data", dir.path().join("missing.csv").to_str().unwrap()]);
    assert_eq!(json(&o)["error"]["kind"], "io");
}

#[test]
fn invalid_values_are_reported_as_config_errors() {
    let doc = json(&run(&["solve", "logistic", "--eps=-1", "--rows", "10", "--cols", "2"]));
    assert_eq!(doc["error"]["kind"], "config");
    let doc = json(&run(&["solve", "lp", "--radius", "1"]));
    assert_eq!(doc["error"]["kind"], "config");
}

#[test]
fn config_file_runs_and_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "task = \"lp\"\nrows = 10\ncols = 3\np = 4.0\n").unwrap();
    let o = run(&["run", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let rep = json(&o);
    assert_eq!(rep["task"], "lp");
    assert!(!rep["result"]["phases"].as_array().unwrap().is_empty());

    std::fs::write(&cfg, "task = \"lp\"\nrow = 10\n").unwrap();
    let o = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["error"]["kind"], "config");
}

#[test]
fn bench_scaling_reports_slopes() {
    let o = run(&["bench", "scaling", "--radii", "4,8,16,32", "--seeds", "1", "--rows", "40", "--cols", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(&o);
    let slope = rep["result"]["accelerated_slope"].as_f64().unwrap();
    assert!(slope.is_finite() && slope > 0.0);
    assert_eq!(rep["result"]["points"].as_array().unwrap().len(), 4);
}

#[test]
fn lowerbound_strategies_stay_within_chain() {
    for strategy in ["subgradient", "greedy", "random"] {
        let o = run(&["lowerbound", "--chain", "6", "--trials", "3", "--strategy", strategy]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let rep = json(&o);
        assert_eq!(rep["result"]["within_chain"], 3, "{strategy}");
    }
    let rep = json(&run(&["lowerbound", "--chain", "6", "--trials", "2", "--ratios", "100,400,1600"]));
    assert!(rep["result"]["scaling_slope"].as_f64().unwrap() > 0.0);
}
