mod common;

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fairthresh"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn fit_writes_policy_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&[
        "fit",
        "--cap-l",
        "1",
        "--dump-lp",
        "--dump-weights",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let policy = json(&dir.path().join("policy.json"));
    let dist = &policy["groups"][0]["distribution"];
    let edges = dist["edges"].as_array().unwrap();
    let dens = dist["densities"].as_array().unwrap();
    assert_eq!(dens.len(), 200);
    let mass: f64 = dens
        .iter()
        .zip(edges.windows(2))
        .map(|(p, w)| p.as_f64().unwrap() * (w[1].as_f64().unwrap() - w[0].as_f64().unwrap()))
        .sum();
    assert!((mass - 1.0).abs() < 1e-9);
    assert_eq!(
        json(&dir.path().join("lp.json"))["objective"]
            .as_array()
            .unwrap()
            .len(),
        200
    );
    assert!(dir.path().join("weights.json").exists());
    let log = json(&dir.path().join("fit.json"));
    assert_eq!(log["lp_status"], "optimal");
    assert!(log["config_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn infeasible_cap_exits_3_and_names_minimum() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "fit",
        "--normalize-scores",
        "--cap-l",
        "0.5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("must be at least"), "{err}");
}

#[test]
fn usage_and_config_errors_exit_2() {
    assert_eq!(run(&["reproduce", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["reproduce", "law-sp"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "fit",
        "--group-mode",
        "parity",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_data_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "fit",
        "--lawschool",
        "/nonexistent.csv",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "decile1b,decile3\n1,2\n").unwrap();
    let o = run(&[
        "fit",
        "--lawschool",
        bad.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn evaluate_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let fit = dir.path().join("fit");
    let o = run(&[
        "fit",
        "--n",
        "1000",
        "--bins",
        "100",
        "--out",
        fit.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let policy = fit.join("policy.json");
    let mut reports = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("eval{k}"));
        let o = run(&[
            "evaluate",
            "--policy",
            policy.to_str().unwrap(),
            "--n",
            "1000",
            "--seeds",
            "3,4,5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        reports.push(std::fs::read(out.join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let r: Value = serde_json::from_slice(&reports[0]).unwrap();
    assert_eq!(r["report"]["per_seed"].as_array().unwrap().len(), 3);
    assert!(r["report"]["f1_macro"]["std"].as_f64().is_some());
}

#[test]
fn deterministic_baseline_on_separable_data() {
    let dir = tempfile::tempdir().unwrap();
    let cdf = dir.path().join("cdf.csv");
    std::fs::write(&cdf, "group,score,cdf\na,0,0\na,100,1\nb,0,0\nb,100,1\n").unwrap();
    let cfg = dir.path().join("config.json");
    // A very sharp label rule makes the data separable at the midpoint.
    std::fs::write(
        &cfg,
        format!(
            r#"{{"dataset":{{"kind":"fico_synthetic","cdf_path":{:?},"options":{{"n":600,"label_center":0.5,"label_scale":1e-9}}}},
               "cost":{{"lambda":1.0,"alpha":100.0,"beta":2.0}},"bins":50,"cap":{{"mode":"direct","cap":1.0}},
               "deterministic":true,"seeds":[1,2]}}"#,
            cdf.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = dir.path().join("run");
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out.join("report.json"));
    assert_eq!(r["report"]["f1_macro"]["mean"].as_f64(), Some(1.0));
    for key in ["s_dp", "eo_dp", "ed_dp"] {
        assert!(r["report"][key]["mean"].as_f64().is_some(), "{key}");
    }
    for f in [
        "config.json",
        "report.txt",
        "stamp.json",
        "policy-seed-1.json",
        "policy-seed-2.json",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn predict_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert!(run(&["fit", "--n", "800", "--out", out]).status.success());
    let policy = dir.path().join("policy.json");
    let o = run(&[
        "predict",
        "--policy",
        policy.to_str().unwrap(),
        "--features",
        "90,1",
        "--seed",
        "5",
    ]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["decision"], 1);
    assert_eq!(v["expected_outcome"], 1.0);
}

#[test]
fn law_sp_table_has_omega_columns() {
    let dir = tempfile::tempdir().unwrap();
    let csv = common::write_lawschool(dir.path(), 2500, 7);
    let out = dir.path().join("law");
    let o = run(&[
        "reproduce",
        "law-sp",
        "--lawschool",
        csv.to_str().unwrap(),
        "--seeds",
        "0,1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    let header = text.lines().find(|l| l.starts_with("Method")).unwrap();
    for col in [
        "Deterministic",
        "Ω = 0.1",
        "Ω = 0.08",
        "Ω = 0.06",
        "Ω = 0.04",
    ] {
        assert!(header.contains(col), "{header}");
    }
    assert!(text.contains("F1 score") && text.contains("S-DP"));
}

#[test]
fn fico_if_table_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "reproduce",
        "fico-if",
        "--seeds",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for row in ["F1 score", "IF ratio", "S-DP", "EO-DP", "ED-DP"] {
        assert!(text.lines().any(|l| l.starts_with(row)), "{row}");
    }
}
