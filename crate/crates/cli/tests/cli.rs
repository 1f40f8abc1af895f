use corrnoise::experiments::ExperimentConfig;
use corrnoise::TimeSeries;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_corrnoise")).args(args).current_dir(dir).output().unwrap();
    assert!(
        out.status.success(),
        "corrnoise {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const LOGISTIC_PRIORS: &str = r#"[{"kind":"uniform","lo":0,"hi":2},{"kind":"uniform","lo":1,"hi":100},{"kind":"uniform","lo":0.01,"hi":10}]"#;

fn simulate(dir: &Path) {
    run(
        &["simulate", "--model", "logistic", "--rho", "0.8", "--length", "200", "--seed", "3", "--out", "sim"],
        dir,
    );
}

#[test]
fn simulate_writes_time_series_and_is_seeded() {
    let d = tempfile::tempdir().unwrap();
    simulate(d.path());
    let a = fs::read(d.path().join("sim/data.csv")).unwrap();
    assert!(a.starts_with(b"time,value\n"));
    let ts = TimeSeries::from_csv_file(d.path().join("sim/data.csv")).unwrap();
    assert_eq!(ts.len(), 200);
    assert!(d.path().join("sim/truth.csv").exists());
    run(&["simulate", "--model", "logistic", "--rho", "0.8", "--length", "200", "--seed", "3", "--out", "again"], d.path());
    assert_eq!(a, fs::read(d.path().join("again/data.csv")).unwrap());
    run(&["simulate", "--model", "logistic", "--rho", "0.8", "--length", "200", "--seed", "4", "--out", "other"], d.path());
    assert_ne!(a, fs::read(d.path().join("other/data.csv")).unwrap());
}

#[test]
fn simulate_from_config() {
    let d = tempfile::tempdir().unwrap();
    fs::write(
        d.path().join("sim.json"),
        r#"{"model":{"kind":"constant"},"params":[10.0],
            "noise":{"kind":"ma1","sigma":0.1,"rho":[],"phi":[0.5]},
            "t_start":0,"t_end":99,"length":100,"solver":"closed_form"}"#,
    )
    .unwrap();
    run(&["simulate", "--config", "sim.json", "--out", "o"], d.path());
    let ts = TimeSeries::from_csv_file(d.path().join("o/data.csv")).unwrap();
    let mean = ts.values().iter().sum::<f64>() / 100.0;
    assert!((mean - 10.0).abs() < 0.1, "{mean}");
}

#[test]
fn fit_mcmc_writes_result_and_draws() {
    let d = tempfile::tempdir().unwrap();
    simulate(d.path());
    let cfg = format!(
        r#"{{"model":{{"kind":"logistic"}},"noise":{{"p":1,"q":0}},
            "priors":{},"method":"mcmc","sampler":{{"chains":2,"iterations":600}}}}"#,
        LOGISTIC_PRIORS.replace("]", r#",{"kind":"uniform","lo":0,"hi":10},{"kind":"uniform","lo":-1,"hi":1}]"#)
    );
    fs::write(d.path().join("fit.json"), cfg).unwrap();
    run(&["fit", "--config", "fit.json", "--data", "sim/data.csv", "--seed", "2", "--out", "f"], d.path());
    let r = json(&d.path().join("f/fit.json"));
    assert_eq!(r["method"], "mcmc");
    assert_eq!(r["param_names"].as_array().unwrap().len(), 5);
    let draws = fs::read_to_string(d.path().join("f/draws.csv")).unwrap();
    assert!(draws.starts_with("chain,iteration,r,kappa,x0,sigma,rho,log_posterior\n"));
    assert_eq!(draws.lines().count(), 1 + 2 * 300);
}

#[test]
fn fit_optimize_has_no_draws() {
    let d = tempfile::tempdir().unwrap();
    simulate(d.path());
    let cfg = format!(
        r#"{{"model":{{"kind":"logistic"}},"noise":{{"p":0,"q":0}},"priors":{},"method":"optimize",
            "optimize":{{"restarts":2,"objective":"likelihood"}}}}"#,
        LOGISTIC_PRIORS.replace("]", r#",{"kind":"uniform","lo":0,"hi":10}]"#)
    );
    fs::write(d.path().join("fit.json"), cfg).unwrap();
    run(&["fit", "--config", "fit.json", "--data", "sim/data.csv", "--out", "f"], d.path());
    let r = json(&d.path().join("f/fit.json"));
    assert_eq!(r["method"], "optimize");
    assert!(!d.path().join("f/draws.csv").exists());
}

#[test]
fn diagnose_flags_autocorrelation() {
    let d = tempfile::tempdir().unwrap();
    simulate(d.path());
    let cfg = format!(r#"{{"model":{{"kind":"logistic"}},"priors":{LOGISTIC_PRIORS}}}"#);
    fs::write(d.path().join("diag.json"), cfg).unwrap();
    run(&["diagnose", "--config", "diag.json", "--data", "sim/data.csv", "--out", "dg"], d.path());
    let acf = fs::read_to_string(d.path().join("dg/acf.csv")).unwrap();
    assert!(acf.starts_with("lag,acf,band_lo,band_hi\n"));
    assert!(fs::read_to_string(d.path().join("dg/aic.csv")).unwrap().starts_with("p,q,"));
    let rec = json(&d.path().join("dg/recommendation.json"));
    assert!(rec["p"].as_u64().unwrap() >= 1);
    let diag = json(&d.path().join("dg/diagnosis.json"));
    assert_eq!(diag["residual_acf"]["substantial_autocorrelation"], true);
}

#[test]
fn vir_formula_point_and_surface() {
    let d = tempfile::tempdir().unwrap();
    let out = run(&["vir", "--formula", "ar1", "--rho", "0.5"], d.path());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["vir"], 3.0);
    let out = run(&["vir", "--formula", "ma1", "--phi", "0.5"], d.path());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v[0]["vir"].as_f64().unwrap() - 1.8).abs() < 1e-12);
    run(&["vir", "--formula", "arma11", "--surface", "--grid", "9", "--out", "s"], d.path());
    let s = fs::read_to_string(d.path().join("s/vir_surface.csv")).unwrap();
    assert!(s.starts_with("rho,phi,vir\n"));
    assert_eq!(s.lines().count(), 1 + 81);
}

#[test]
fn vir_for_ode_model() {
    let d = tempfile::tempdir().unwrap();
    fs::write(
        d.path().join("vir.json"),
        r#"{"model":{"kind":"logistic"},"params":[0.5,50,1],"t_start":0,"t_end":20,"length":200,"rho":0.8}"#,
    )
    .unwrap();
    run(&["vir", "--config", "vir.json", "--out", "v"], d.path());
    let v = json(&d.path().join("v/vir.json"));
    let names: Vec<_> = v.as_array().unwrap().iter().map(|e| e["parameter"].as_str().unwrap().to_string()).collect();
    assert_eq!(names, ["r", "kappa", "x0"]);
    assert!(v.as_array().unwrap().iter().all(|e| e["vir"].as_f64().unwrap() > 1.0));
}

#[test]
fn experiment_from_config_writes_outputs() {
    let d = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::preset("ma1", false).unwrap();
    cfg.noise_grid.truncate(2);
    cfg.replicates = 2;
    cfg.length = 200;
    cfg.sampler.chains = 2;
    cfg.sampler.iterations = 600;
    cfg.out = None;
    fs::write(d.path().join("exp.json"), cfg.to_json().unwrap()).unwrap();
    run(&["--threads", "1", "experiment", "--config", "exp.json", "--seed", "9", "--out", "e"], d.path());
    for f in ["records.csv", "summary.csv", "vir.csv", "report.json", "vir_curve.csv"] {
        assert!(d.path().join("e").join(f).exists(), "{f} missing");
    }
    let report = json(&d.path().join("e/report.json"));
    assert_eq!(report["config"]["seed"], 9);
}

#[test]
fn bad_inputs_fail_cleanly() {
    let d = tempfile::tempdir().unwrap();
    let s = |args: &[&str]| Command::new(env!("CARGO_BIN_EXE_corrnoise")).args(args).current_dir(d.path()).output().unwrap();
    assert!(!s(&["experiment", "nonsense"]).status.success());
    assert!(!s(&["vir"]).status.success());
    assert!(!s(&["vir", "--formula", "ar1", "--rho", "1.0"]).status.success());
    assert!(!s(&["fit", "--config", "missing.json", "--data", "x.csv"]).status.success());
}
