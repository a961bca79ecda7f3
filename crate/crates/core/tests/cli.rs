use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fatreat::gibbs::DrawColumns;
use serde_json::{json, Value};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fatreat"))
        .args(args)
        .output()
        .expect("spawn fatreat")
}

fn scenario(n: usize, periods: usize, seed: u64) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/scenario_sf.json");
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["n"] = json!(n);
    v["seed"] = json!(seed);
    if periods != 4 {
        let cut = |v: &mut Value| {
            let a = v.as_array_mut().unwrap();
            a.truncate(periods);
        };
        for key in ["mu", "kappa"] {
            cut(&mut v["coefficients"][key]);
        }
        for key in ["lambda0", "lambda1", "zeta0", "zeta1"] {
            cut(&mut v["loadings"][key]);
        }
        for key in ["sigma2_0", "sigma2_1"] {
            cut(&mut v["variances"][key]);
        }
        v["periods"] = json!(periods);
    }
    v
}

fn write_json(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(dir: &Path, config: &Value) -> PathBuf {
    let cfg = write_json(dir, "sim.json", config);
    let out = bin(&["simulate", "--config", s(&cfg), "--out-dir", s(dir), "--quiet"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    dir.join("data.csv")
}

fn short_chain() -> Value {
    json!({"chain": {"iterations": 400, "burn_in": 200, "thin": 2, "selection_start": 100, "seed": 3}})
}

#[test]
fn simulate_is_a_function_of_config_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    let cfg = write_json(dir.path(), "sim.json", &scenario(300, 4, 5));
    for (out, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        let o = bin(&["simulate", "--config", s(&cfg), "--seed", seed, "--out-dir", s(out), "--quiet"]);
        assert!(o.status.success());
    }
    for f in ["data.csv", "truth.csv", "meta.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_ne!(std::fs::read(a.join("data.csv")).unwrap(), std::fs::read(c.join("data.csv")).unwrap());
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(a.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["n"], 300);
    assert_eq!(meta["ate_true"].as_array().unwrap().len(), 4);
}

#[test]
fn short_panel_is_refused_with_the_inequality() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), &scenario(200, 3, 1));
    let out = bin(&["fit", "--data", s(&data), "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("T=3"), "{err}");
    assert!(err.contains("T(T+1) >= 2(r+1)T + 1"), "{err}");
    assert!(!dir.path().join("draws_chain1.csv").exists());
}

#[test]
fn empty_dataset_runs_with_override() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("empty.csv");
    std::fs::write(&data, "id,t,x,y,v_1,w_1\n").unwrap();
    let mut cfg = short_chain();
    cfg["periods"] = json!(3);
    let cfg = write_json(dir.path(), "fit.json", &cfg);
    let base = ["fit", "--config", s(&cfg), "--data", s(&data), "--out-dir", s(dir.path()), "--quiet"];
    assert_eq!(bin(&base).status.code(), Some(1));
    let mut args = base.to_vec();
    args.push("--allow-unidentified");
    let out = bin(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("draws_chain1.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 100);
}

#[test]
fn draws_file_follows_the_column_contract() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), &scenario(250, 4, 2));
    let cfg = write_json(dir.path(), "fit.json", &short_chain());
    let out = bin(&["fit", "--config", s(&cfg), "--data", s(&data), "--out-dir", s(dir.path()), "--quiet"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("draws_chain1.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    // Scenario: intercept, instrument and two continuous covariates select; the two continuous ones enter the outcomes.
    assert_eq!(header, DrawColumns::new(4, 4, 2).names());
    assert_eq!(&header[..5], ["alpha[1]", "alpha[2]", "alpha[3]", "alpha[4]", "mu[1]"]);
    assert_eq!(header.last().unwrap(), "ate[4]");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r.split(',').count() == header.len()));
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("draws_chain1.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 3);
    assert_eq!(meta["draws"], 100);
    assert_eq!(meta["model"], "fa");
}

#[test]
fn summarize_pools_chains_and_reports_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let data = simulate(root, &scenario(400, 4, 4));
    let cfg = write_json(root, "fit.json", &short_chain());
    let fit = bin(&["fit", "--config", s(&cfg), "--data", s(&data), "--chains", "2", "--out-dir", s(root), "--quiet"]);
    assert!(fit.status.success(), "{}", String::from_utf8_lossy(&fit.stderr));
    let (c1, c2) = (root.join("draws_chain1.csv"), root.join("draws_chain2.csv"));
    let out = bin(&["summarize", "--draws", s(&c1), s(&c2), "--data", s(&data), "--out-dir", s(root)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = String::from_utf8_lossy(&out.stdout);
    assert!(report.starts_with("200 draws from 2 chain(s)"), "{report}");
    assert!(report.contains("true ATE"));

    let ate = std::fs::read_to_string(root.join("ate.csv")).unwrap();
    let mut lines = ate.lines();
    assert_eq!(lines.next().unwrap(), "period,plug_in,mean,lower,upper,truth,covered");
    for line in lines {
        let f: Vec<f64> = line.split(',').take(6).map(|x| x.parse().unwrap()).collect();
        assert!(f[3] <= f[2] && f[2] <= f[4], "{line}");
    }
    let summary = std::fs::read_to_string(root.join("summary.csv")).unwrap();
    assert!(summary.lines().any(|l| l.starts_with("mu[1],") && l.ends_with(',')));
    assert!(summary.lines().any(|l| l.starts_with("theta[2],")));
    let diag = std::fs::read_to_string(root.join("diagnostics.csv")).unwrap();
    assert!(diag.lines().any(|l| l.starts_with("2,lambda_x,")));
    let svg = std::fs::read_to_string(root.join("ate.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("HPD"));
}

#[test]
fn check_reports_the_counting_condition() {
    let dir = tempfile::tempdir().unwrap();
    let d4 = simulate(dir.path(), &scenario(100, 4, 1));
    let ok = bin(&["check", "--data", s(&d4)]);
    assert_eq!(ok.status.code(), Some(0));
    let text = String::from_utf8_lossy(&ok.stdout);
    assert!(text.contains("T(T+1) = 20 >= 2(r+1)T + 1 = 17: pass"), "{text}");

    let sub = dir.path().join("t5");
    std::fs::create_dir_all(&sub).unwrap();
    let d5 = simulate(&sub, &scenario_with_periods(5));
    let bad = bin(&["check", "--data", s(&d5), "--r", "2"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("30 < 2(r+1)T + 1 = 31: fail"));
}

fn scenario_with_periods(t: usize) -> Value {
    let mut v = scenario(100, 4, 1);
    let ext = |v: &mut Value, x: f64| v.as_array_mut().unwrap().resize(t, json!(x));
    for key in ["mu", "kappa"] {
        ext(&mut v["coefficients"][key], 0.5);
    }
    for key in ["lambda0", "lambda1", "zeta0", "zeta1"] {
        ext(&mut v["loadings"][key], 0.0);
    }
    for key in ["sigma2_0", "sigma2_1"] {
        ext(&mut v["variances"][key], 1.0);
    }
    v["periods"] = json!(t);
    v
}

#[test]
fn user_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad_cfg = write_json(dir.path(), "bad.json", &json!({"chian": {}}));
    let data = simulate(dir.path(), &scenario(50, 4, 1));
    let out = bin(&["fit", "--config", s(&bad_cfg), "--data", s(&data), "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("chian"));
    assert_eq!(bin(&["fit", "--model", "xx"]).status.code(), Some(1));
    assert_eq!(bin(&["summarize", "--data", s(&data)]).status.code(), Some(1));
    assert_eq!(bin(&["check", "--data", s(&dir.path().join("missing.csv"))]).status.code(), Some(1));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}
