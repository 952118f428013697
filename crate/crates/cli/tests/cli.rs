use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SIMPLIFIED: &str =
    "MAPE ~ truth + alts + weight + truth*depth+depth*weight + truth*depth*weight + depth*weight*answers";

fn rrdoe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rrdoe")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_json(o: &Output) -> Value {
    assert!(!o.status.success());
    serde_json::from_slice(&o.stderr).unwrap_or_else(|e| {
        panic!("stderr is not JSON ({e}): {}", String::from_utf8_lossy(&o.stderr))
    })
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn design_lists_corners_in_standard_order() {
    let o = rrdoe(&["design", "--scale", "0.5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 65);
    assert_eq!(lines[0], "std_order,truth,depth,alts,weight,pop,answers");
    assert_eq!(lines[1], "1,-0.5,-0.5,-0.5,-0.5,-0.5,-0.5");
    assert_eq!(lines[2], "2,0.5,-0.5,-0.5,-0.5,-0.5,-0.5");
    assert_eq!(lines[64], "64,0.5,0.5,0.5,0.5,0.5,0.5");
}

#[test]
fn design_in_actual_units() {
    let o = rrdoe(&["design", "--actual"]);
    let text = stdout(&o);
    let last = text.lines().last().unwrap();
    assert_eq!(last, "64,0.9,5,10,0.9,100000,0.9");
}

#[test]
fn simulate_reports_the_scenario() {
    let o = rrdoe(&["simulate", "--reps", "4", "--pop", "500", "--truth", "0.9", "--seed", "7"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["scenario"]["pop"], 500);
    assert_eq!(v["scenario"]["truth"], 0.9);
    assert_eq!(v["estimates"].as_array().unwrap().len(), 4);
    assert!(v["mape"].as_f64().unwrap() >= 0.0);
    assert_eq!(v["true_fraction"], 0.5);
    // same seed, same output
    assert_eq!(o.stdout, rrdoe(&["simulate", "--reps", "4", "--pop", "500", "--truth", "0.9", "--seed", "7"]).stdout);
}

#[test]
fn simulate_rejects_zero_truth() {
    let e = error_json(&rrdoe(&["simulate", "--truth", "0"]));
    assert_eq!(e["error"], "non_invertible_mechanism");
}

// The population is pinned high: at the smallest population the deepest
// question on some corners is reached by nobody and the row cannot be
// estimated.
const CAMPAIGN_CONFIG: &str = r#"{ "overrides": { "pop": 100000 } }"#;

#[test]
fn run_campaign_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, CAMPAIGN_CONFIG).unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = rrdoe(&[
            "run-campaign",
            "--config",
            path_str(&config),
            "--reps",
            "2",
            "--seed",
            "11",
            "--out",
            path_str(out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 66);
    assert_eq!(lines[0], "std_order,truth,depth,alts,weight,pop,answers,mape");
    assert!(lines[1].starts_with("0,0,0,0,0,0,0,"));
}

#[test]
fn run_campaign_reports_the_failing_row() {
    let e = error_json(&rrdoe(&["run-campaign", "--reps", "30"]));
    assert_eq!(e["error"], "campaign_row");
    assert!(e["message"].as_str().unwrap().starts_with("campaign row "));
}

#[test]
fn run_campaign_reuses_known_rows() {
    let o = rrdoe(&["run-campaign", "--scale", "0.5", "--reps", "1", "--known", "fixture:exp2"]);
    assert!(o.status.success());
    let produced = rrdoe::regression::ExperimentTable::from_csv_str(&stdout(&o)).unwrap();
    let fixture = rrdoe::campaign::load_fixture("exp2").unwrap();
    assert_eq!(produced.len(), fixture.len());
    for row in produced.rows() {
        assert_eq!(fixture.lookup(&row.coded), Some(row.response), "row {}", row.std_order);
    }
}

#[test]
fn fit_predict_and_diagnose_the_simplified_model() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let o = rrdoe(&[
        "fit",
        "--corners",
        "fixture:exp2",
        "--data",
        "fixture:validation",
        "--formula",
        SIMPLIFIED,
        "--out",
        path_str(&model),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(m["terms"].as_array().unwrap().len(), 13);
    assert_eq!(m["n_obs"], 104);
    assert!((m["r_squared"].as_f64().unwrap() - 0.7846).abs() < 0.001);

    let o = rrdoe(&["predict", "--model", path_str(&model), "--point", "0,0,0,0,0,0", "--point", "1,1,1,1,1,1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["value"].as_f64(), m["coefficients"][0].as_f64());
    assert_eq!(lines[0]["extrapolation"], false);
    assert_eq!(lines[1]["extrapolation"], true);

    let out = dir.path().join("diag");
    let o = rrdoe(&[
        "diagnose",
        "--model",
        path_str(&model),
        "--samples",
        "fixture:validation",
        "--out-dir",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["histogram", "fitted_vs_residual", "qq", "pareto"] {
        let svg = std::fs::read_to_string(out.join(format!("{name}.svg"))).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"), "{name}");
        let csv = std::fs::read_to_string(out.join(format!("{name}.csv"))).unwrap();
        assert!(csv.lines().count() > 1, "{name}");
    }
    // 40 samples under Sturges give 7 bins
    let hist = std::fs::read_to_string(out.join("histogram.csv")).unwrap();
    assert_eq!(hist.lines().count(), 8);
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["n_samples"], 40);
    assert!(summary["max_abs_residual"].as_f64().unwrap() >= summary["max_residual"].as_f64().unwrap());
    let pareto = std::fs::read_to_string(out.join("pareto.csv")).unwrap();
    assert!(pareto.lines().nth(1).unwrap().starts_with("truth:depth:weight,"));
}

#[test]
fn diagnose_honours_fixed_bins() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    assert!(rrdoe(&["fit", "--corners", "fixture:exp2", "--data", "fixture:validation", "--out", path_str(&model)])
        .status
        .success());
    let out = dir.path().join("d");
    let o = rrdoe(&[
        "diagnose",
        "--model",
        path_str(&model),
        "--samples",
        "fixture:validation",
        "--out-dir",
        path_str(&out),
        "--bins",
        "12",
    ]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(out.join("histogram.csv")).unwrap().lines().count(), 13);
}

#[test]
fn refine_on_fixture_models() {
    let dir = tempfile::tempdir().unwrap();
    let m1 = dir.path().join("m1.json");
    let m2 = dir.path().join("m2.json");
    assert!(rrdoe(&["fit", "--corners", "fixture:exp1", "--out", path_str(&m1)]).status.success());
    assert!(rrdoe(&["fit", "--corners", "fixture:exp2", "--out", path_str(&m2)]).status.success());

    let o = rrdoe(&["refine", "--model", path_str(&m1), "--samples", "fixture:exp2"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["decision"]["decision"], "zoom");
    assert_eq!(v["decision"]["scale"], 0.5);
    assert!((v["max_abs_residual"].as_f64().unwrap() - 693.6448).abs() < 0.01);

    let o = rrdoe(&["refine", "--model", path_str(&m2), "--scale", "0.5", "--samples", "fixture:exp2"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["decision"]["decision"], "accept");
    assert!((v["probes"][0]["residual"].as_f64().unwrap().abs() - 1.1504).abs() < 1e-4);
}

#[test]
fn validate_samples_both_sets() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.csv");
    let o = rrdoe(&["validate", "--count", "5", "--reps", "2", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["mid_corners"], 5);
    assert_eq!(v["random_space"], 5);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert!(text.lines().nth(1).unwrap().starts_with("0,0,0,0,0,0,0,"));
}

#[test]
fn replicate_paper_reports_every_check() {
    let o = rrdoe(&["replicate-paper"]);
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    let checks = report["checks"].as_array().unwrap();
    let passed = |name: &str| checks.iter().find(|c| c["name"] == name).unwrap()["passed"].as_bool().unwrap();
    assert!(passed("full model R²"));
    assert!(passed("simplified model R²"));
    assert!(passed("second model refinement accepts"));
    let all = checks.iter().all(|c| c["passed"] == true);
    // the exit status follows the checks
    assert_eq!(o.status.success(), all);
    if !all {
        assert_eq!(error_json(&o)["error"], "replication_mismatch");
    }
}

#[test]
fn errors_are_json_on_stderr() {
    let e = error_json(&rrdoe(&["fit", "--data", "/nonexistent/x.csv"]));
    assert_eq!(e["error"], "io");
    assert!(e["message"].as_str().unwrap().contains("x.csv"));

    let e = error_json(&rrdoe(&["fit", "--data", "fixture:nope"]));
    assert_eq!(e["error"], "unknown_fixture");

    let e = error_json(&rrdoe(&["fit", "--data", "fixture:exp1", "--formula", "MAPE ~ colour"]));
    assert_eq!(e["error"], "formula");

    let o = rrdoe(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"], "usage");
}

#[test]
fn fit_reports_singular_and_underdetermined_designs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    std::fs::write(&data, "std_order,a,b,mape\n1,-1,-1,1\n2,1,1,2\n3,-1,-1,3\n4,1,1,5\n").unwrap();
    let e = error_json(&rrdoe(&["fit", "--data", path_str(&data), "--formula", "y ~ a + b"]));
    assert_eq!(e["error"], "singular_design");
    let e = error_json(&rrdoe(&["fit", "--data", path_str(&data), "--formula", "y ~ a*b + a:b"]));
    assert!(e["error"] == "singular_design" || e["error"] == "formula");

    let small = dir.path().join("s.csv");
    std::fs::write(&small, "std_order,a,b,mape\n1,-1,-1,1\n2,1,-1,2\n").unwrap();
    let e = error_json(&rrdoe(&["fit", "--data", path_str(&small)]));
    assert_eq!(e["error"], "under_determined");
}

#[test]
fn help_exits_cleanly() {
    let o = rrdoe(&["--help"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("replicate-paper"));
}
