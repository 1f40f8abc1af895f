use super::{ReplicateRecord, TheoryRow};
use crate::infer::quantile;
use serde::{Deserialize, Serialize};

pub(crate) fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

/// Per (setting, fit, parameter) aggregate over replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub setting: usize,
    pub noise: String,
    pub rho: String,
    pub phi: String,
    pub fit: String,
    pub parameter: String,
    pub n_ok: usize,
    pub n_failed: usize,
    /// Percentage of replicates whose 95% interval covers the truth.
    pub coverage_pct: Option<f64>,
    /// Standard error of `coverage_pct`.
    pub coverage_se: Option<f64>,
    pub err_q025: Option<f64>,
    pub err_median: Option<f64>,
    pub err_q975: Option<f64>,
    pub mean_sd: f64,
    pub max_rhat: Option<f64>,
}

/// Per (setting, parameter) posterior VIR against theory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirCurveRow {
    pub setting: usize,
    pub rho: String,
    pub phi: String,
    pub parameter: String,
    pub n: usize,
    pub mean_vir: f64,
    pub sd_vir: f64,
    pub theory_asymptotic: f64,
    pub theory_exact: Option<f64>,
    /// `mean_vir / theory - 1`, against the exact value when available.
    pub rel_dev: f64,
}

pub fn summarize(records: &[ReplicateRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, String, String)> = Vec::new();
    for r in records {
        for f in &r.fits {
            for p in &f.params {
                let k = (r.setting, f.label.clone(), p.name.clone());
                if !keys.contains(&k) {
                    keys.push(k);
                }
            }
        }
    }
    keys.into_iter()
        .map(|(setting, fit, parameter)| {
            let in_setting: Vec<&ReplicateRecord> = records.iter().filter(|r| r.setting == setting).collect();
            let noise = &in_setting[0].noise;
            let outcomes: Vec<_> = in_setting.iter().filter_map(|r| r.fit(&fit)).collect();
            let params: Vec<_> = outcomes.iter().filter_map(|f| f.param(&parameter)).collect();
            let n_failed = outcomes.iter().filter(|f| !f.ok()).count();
            let covered: Vec<bool> = params.iter().filter_map(|p| p.covered).collect();
            let (coverage_pct, coverage_se) = if covered.is_empty() {
                (None, None)
            } else {
                let n = covered.len() as f64;
                let p = covered.iter().filter(|&&c| c).count() as f64 / n;
                (Some(100.0 * p), Some(100.0 * (p * (1.0 - p) / n).sqrt()))
            };
            let errs: Vec<f64> = params.iter().filter_map(|p| p.abs_pct_error).collect();
            let q = |p: f64| (!errs.is_empty()).then(|| quantile(&errs, p));
            SummaryRow {
                setting,
                noise: noise.label(),
                rho: join(noise.rho()),
                phi: join(noise.phi()),
                fit,
                parameter,
                n_ok: params.len(),
                n_failed,
                coverage_pct,
                coverage_se,
                err_q025: q(0.025),
                err_median: q(0.5),
                err_q975: q(0.975),
                mean_sd: params.iter().map(|p| p.sd).sum::<f64>() / params.len().max(1) as f64,
                max_rhat: params.iter().filter_map(|p| p.rhat).reduce(f64::max),
            }
        })
        .collect()
}

pub fn vir_curve(records: &[ReplicateRecord], theory: &[TheoryRow]) -> Vec<VirCurveRow> {
    theory
        .iter()
        .filter_map(|t| {
            let vals: Vec<f64> = records
                .iter()
                .filter(|r| r.setting == t.setting)
                .flat_map(|r| r.vir.iter().filter(|v| v.parameter == t.parameter).map(|v| v.empirical))
                .collect();
            if vals.is_empty() {
                return None;
            }
            let noise = &records.iter().find(|r| r.setting == t.setting)?.noise;
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let sd = if vals.len() > 1 {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            let reference = t.exact.unwrap_or(t.asymptotic);
            Some(VirCurveRow {
                setting: t.setting,
                rho: join(noise.rho()),
                phi: join(noise.phi()),
                parameter: t.parameter.clone(),
                n: vals.len(),
                mean_vir: mean,
                sd_vir: sd,
                theory_asymptotic: t.asymptotic,
                theory_exact: t.exact,
                rel_dev: mean / reference - 1.0,
            })
        })
        .collect()
}

/// Fraction of replicates in which fit `a`'s posterior median is closer to
/// the truth than fit `b`'s, for one parameter (optionally one setting).
pub fn closer_fraction(records: &[ReplicateRecord], a: &str, b: &str, parameter: &str, setting: Option<usize>) -> Option<f64> {
    let mut wins = 0usize;
    let mut n = 0usize;
    for r in records.iter().filter(|r| setting.is_none_or(|s| s == r.setting)) {
        let (Some(pa), Some(pb)) = (r.fit(a).and_then(|f| f.param(parameter)), r.fit(b).and_then(|f| f.param(parameter))) else {
            continue;
        };
        let (Some(ea), Some(eb)) = (pa.abs_pct_error, pb.abs_pct_error) else { continue };
        n += 1;
        wins += (ea < eb) as usize;
    }
    (n > 0).then(|| wins as f64 / n as f64)
}
