//! Replicate studies: simulate under a grid of noise processes, fit each
//! candidate noise model by MCMC, and compare posterior VIRs with theory.
//!
//! Replicate `r` of setting `s` draws its data from seed
//! `derive_seed(seed, [s, r])` and fits candidate `k` with
//! `derive_seed(seed, [s, r, k + 1])` (see [`crate::seed`]).

mod aggregate;
mod config;
mod harness;
mod surface;

pub use aggregate::{closer_fraction, summarize, vir_curve, SummaryRow, VirCurveRow};
pub use config::{ExperimentConfig, FitSpec, ModelSpec};
pub use harness::{run_replicates, theory, FitOutcome, ParamRecord, ReplicateRecord, TheoryRow, VirRecord};
pub use surface::{open_grid, vir_surface, write_surface_csv, SurfaceFormula, SurfacePoint};

use crate::{Error, Result};
use aggregate::join;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub numerator: String,
    pub denominator: String,
    pub parameter: String,
    pub setting: Option<usize>,
    /// Fraction of replicates where the numerator fit's median is closer to the truth.
    pub closer_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attrition {
    pub fits: usize,
    pub failed: usize,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub config: ExperimentConfig,
    pub attrition: Attrition,
    pub comparisons: Vec<Comparison>,
    pub summary: Vec<SummaryRow>,
    pub vir_curve: Vec<VirCurveRow>,
    /// Mean posterior VIR non-decreasing along the noise grid, per parameter.
    pub vir_monotone: Vec<(String, bool)>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<ReplicateRecord>,
    pub theory: Vec<TheoryRow>,
    pub report: ExperimentReport,
}

/// Runs the study and assembles the report; nothing is written.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let records = run_replicates(config)?;
    let theory = theory(config)?;
    let report = build_report(config, &records, &theory);
    Ok(ExperimentOutput { records, theory, report })
}

pub fn build_report(config: &ExperimentConfig, records: &[ReplicateRecord], theory: &[TheoryRow]) -> ExperimentReport {
    let mut failures = Vec::new();
    let mut fits = 0;
    for r in records {
        for f in &r.fits {
            fits += 1;
            if let Some(e) = &f.error {
                failures.push(format!("setting {} replicate {} fit {}: {e}", r.setting, r.replicate, f.label));
            }
        }
    }
    let names = config.model.build().map(|m| m.param_names()).unwrap_or_default();
    let mut comparisons = Vec::new();
    if let Some((a, b)) = config.vir_labels() {
        for p in &names {
            for setting in std::iter::once(None).chain((0..config.noise_grid.len()).map(Some)) {
                comparisons.push(Comparison {
                    numerator: a.clone(),
                    denominator: b.clone(),
                    parameter: p.clone(),
                    setting,
                    closer_fraction: closer_fraction(records, &a, &b, p, setting),
                });
            }
        }
    }
    let curve = vir_curve(records, theory);
    let vir_monotone = names
        .iter()
        .map(|p| {
            let m: Vec<f64> = curve.iter().filter(|c| &c.parameter == p).map(|c| c.mean_vir).collect();
            (p.clone(), m.windows(2).all(|w| w[1] >= w[0]))
        })
        .collect();
    ExperimentReport {
        name: config.name.clone(),
        config: config.clone(),
        attrition: Attrition { fits, failed: failures.len(), failures },
        comparisons,
        summary: summarize(records),
        vir_curve: curve,
        vir_monotone,
    }
}

#[derive(Serialize)]
struct RecordRow<'a> {
    setting: usize,
    replicate: usize,
    seed: u64,
    noise: String,
    sigma_gen: f64,
    rho_gen: String,
    phi_gen: String,
    fit: &'a str,
    status: &'a str,
    parameter: &'a str,
    truth: Option<f64>,
    mean: Option<f64>,
    sd: Option<f64>,
    median: Option<f64>,
    q025: Option<f64>,
    q975: Option<f64>,
    rhat: Option<f64>,
    covered: Option<bool>,
    abs_pct_error: Option<f64>,
}

#[derive(Serialize)]
struct VirRow<'a> {
    setting: usize,
    replicate: usize,
    rho: String,
    phi: String,
    parameter: &'a str,
    empirical_vir: f64,
    theory_asymptotic: Option<f64>,
    theory_exact: Option<f64>,
}

#[derive(Serialize)]
struct IntervalRow<'a> {
    setting: usize,
    rho: String,
    phi: String,
    replicate: usize,
    fit: &'a str,
    parameter: &'a str,
    truth: Option<f64>,
    median: f64,
    q025: f64,
    q975: f64,
}

#[derive(Serialize)]
struct ErrorRow<'a> {
    setting: usize,
    rho: &'a str,
    phi: &'a str,
    fit: &'a str,
    parameter: &'a str,
    err_q025: Option<f64>,
    err_median: Option<f64>,
    err_q975: Option<f64>,
}

#[derive(Serialize)]
struct CoverageRow<'a> {
    setting: usize,
    rho: &'a str,
    phi: &'a str,
    fit: &'a str,
    parameter: &'a str,
    n: usize,
    coverage_pct: Option<f64>,
    coverage_se: Option<f64>,
}

fn csv_file(dir: &Path, name: &str) -> Result<csv::Writer<std::fs::File>> {
    Ok(csv::Writer::from_path(dir.join(name))?)
}

/// Writes `records.csv`, `summary.csv`, `vir.csv`, `report.json` and the
/// plot-ready `posterior_intervals.csv`, `point_errors.csv`,
/// `coverage.csv` and `vir_curve.csv`.
pub fn write_outputs(out: &ExperimentOutput, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;

    let mut w = csv_file(dir, "records.csv")?;
    for r in &out.records {
        for f in &r.fits {
            let base = |parameter: &'static str| RecordRow {
                setting: r.setting,
                replicate: r.replicate,
                seed: r.seed,
                noise: r.noise.label(),
                sigma_gen: r.noise.sigma(),
                rho_gen: join(r.noise.rho()),
                phi_gen: join(r.noise.phi()),
                fit: &f.label,
                status: "failed",
                parameter,
                truth: None,
                mean: None,
                sd: None,
                median: None,
                q025: None,
                q975: None,
                rhat: None,
                covered: None,
                abs_pct_error: None,
            };
            if !f.ok() {
                w.serialize(base(""))?;
            }
            for p in &f.params {
                w.serialize(RecordRow {
                    status: "ok",
                    parameter: &p.name,
                    truth: p.truth,
                    mean: Some(p.mean),
                    sd: Some(p.sd),
                    median: Some(p.median),
                    q025: Some(p.q025),
                    q975: Some(p.q975),
                    rhat: p.rhat,
                    covered: p.covered,
                    abs_pct_error: p.abs_pct_error,
                    ..base("")
                })?;
            }
        }
    }
    w.flush()?;

    let mut w = csv_file(dir, "summary.csv")?;
    for s in &out.report.summary {
        w.serialize(s)?;
    }
    w.flush()?;

    let mut w = csv_file(dir, "vir.csv")?;
    for r in &out.records {
        for v in &r.vir {
            let t = out.theory.iter().find(|t| t.setting == r.setting && t.parameter == v.parameter);
            w.serialize(VirRow {
                setting: r.setting,
                replicate: r.replicate,
                rho: join(r.noise.rho()),
                phi: join(r.noise.phi()),
                parameter: &v.parameter,
                empirical_vir: v.empirical,
                theory_asymptotic: t.map(|t| t.asymptotic),
                theory_exact: t.and_then(|t| t.exact),
            })?;
        }
    }
    w.flush()?;

    let mut w = csv_file(dir, "posterior_intervals.csv")?;
    for r in &out.records {
        for f in r.fits.iter().filter(|f| f.ok()) {
            for p in &f.params {
                w.serialize(IntervalRow {
                    setting: r.setting,
                    rho: join(r.noise.rho()),
                    phi: join(r.noise.phi()),
                    replicate: r.replicate,
                    fit: &f.label,
                    parameter: &p.name,
                    truth: p.truth,
                    median: p.median,
                    q025: p.q025,
                    q975: p.q975,
                })?;
            }
        }
    }
    w.flush()?;

    let mut errors = csv_file(dir, "point_errors.csv")?;
    let mut coverage = csv_file(dir, "coverage.csv")?;
    for s in out.report.summary.iter().filter(|s| s.err_median.is_some()) {
        errors.serialize(ErrorRow {
            setting: s.setting,
            rho: &s.rho,
            phi: &s.phi,
            fit: &s.fit,
            parameter: &s.parameter,
            err_q025: s.err_q025,
            err_median: s.err_median,
            err_q975: s.err_q975,
        })?;
        coverage.serialize(CoverageRow {
            setting: s.setting,
            rho: &s.rho,
            phi: &s.phi,
            fit: &s.fit,
            parameter: &s.parameter,
            n: s.n_ok,
            coverage_pct: s.coverage_pct,
            coverage_se: s.coverage_se,
        })?;
    }
    errors.flush()?;
    coverage.flush()?;

    let mut w = csv_file(dir, "vir_curve.csv")?;
    for c in &out.report.vir_curve {
        w.serialize(c)?;
    }
    w.flush()?;

    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&out.report)? + "\n")?;
    Ok(())
}

/// Runs and writes to `config.out`, which must be set.
pub fn run_and_write(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let dir = config.out.clone().ok_or_else(|| Error::Config("no output directory".into()))?;
    let out = run_experiment(config)?;
    write_outputs(&out, dir)?;
    Ok(out)
}
