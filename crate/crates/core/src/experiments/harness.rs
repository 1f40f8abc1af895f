use super::ExperimentConfig;
use crate::fisher::{vir_arma_pq_constant, vir_initial_state, vir_multiparam_exact};
use crate::infer::{sample_posterior, FitResult};
use crate::likelihood::ObservationModel;
use crate::odes::{sensitivities, DynamicalModel, SensitivityMethod};
use crate::seed::derive_seed;
use crate::{NoiseKind, NoiseModel, Result, TimeSeries};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Posterior summary of one parameter in one fit, scored against the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub name: String,
    pub truth: Option<f64>,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub q025: f64,
    pub q975: f64,
    pub rhat: Option<f64>,
    /// Truth inside the 95% interval.
    pub covered: Option<bool>,
    /// `100 |median - truth| / |truth|`.
    pub abs_pct_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub label: String,
    /// `None` on success, else the failure message.
    pub error: Option<String>,
    pub params: Vec<ParamRecord>,
    pub acceptance: f64,
}

impl FitOutcome {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn param(&self, name: &str) -> Option<&ParamRecord> {
        self.params.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirRecord {
    pub parameter: String,
    /// Posterior variance ratio numerator / denominator fit.
    pub empirical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub setting: usize,
    pub replicate: usize,
    pub seed: u64,
    pub noise: NoiseModel,
    pub fits: Vec<FitOutcome>,
    pub vir: Vec<VirRecord>,
}

impl ReplicateRecord {
    pub fn fit(&self, label: &str) -> Option<&FitOutcome> {
        self.fits.iter().find(|f| f.label == label)
    }
}

/// Theoretical VIRs of one setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryRow {
    pub setting: usize,
    pub parameter: String,
    /// Constant-mean closed form for the generating noise.
    pub asymptotic: f64,
    /// Finite-sample value from the sensitivities (AR(1) noise only),
    /// accounting for an estimated initial state where there is one.
    pub exact: Option<f64>,
}

pub(crate) fn data_seed(master: u64, setting: usize, replicate: usize) -> u64 {
    derive_seed(master, &[setting as u64, replicate as u64])
}

pub(crate) fn fit_seed(master: u64, setting: usize, replicate: usize, fit: usize) -> u64 {
    derive_seed(master, &[setting as u64, replicate as u64, 1 + fit as u64])
}

fn score(fit: &FitResult, truths: &[Option<f64>]) -> Vec<ParamRecord> {
    fit.summaries
        .iter()
        .zip(truths)
        .map(|(s, &truth)| ParamRecord {
            name: s.name.clone(),
            truth,
            mean: s.mean,
            sd: s.sd,
            median: s.median,
            q025: s.q025,
            q975: s.q975,
            rhat: s.rhat,
            covered: truth.map(|t| s.q025 <= t && t <= s.q975),
            abs_pct_error: truth.map(|t| 100.0 * (s.median - t).abs() / t.abs()),
        })
        .collect()
}

pub(crate) fn grid(config: &ExperimentConfig) -> Result<TimeSeries> {
    TimeSeries::grid(config.t_start, config.t_end, config.length)
}

fn run_replicate(
    config: &ExperimentConfig,
    dynamics: &Arc<dyn DynamicalModel>,
    grid: &TimeSeries,
    setting: usize,
    replicate: usize,
) -> Result<ReplicateRecord> {
    let noise = config.noise_grid[setting].clone();
    let seed = data_seed(config.seed, setting, replicate);
    let gen = ObservationModel::new(dynamics.clone(), crate::likelihood::NoiseSpec::orders(noise.p(), noise.q()));
    let mut theta = config.truth.clone();
    theta.push(noise.sigma());
    theta.extend(noise.rho());
    theta.extend(noise.phi());
    let gen = gen.with_solver(config.solver);
    let data = gen.simulate(grid, &theta, seed)?;

    let m = dynamics.param_dim();
    let mut fits = Vec::with_capacity(config.fits.len());
    let mut variances: Vec<Option<Vec<f64>>> = Vec::new();
    for (k, spec) in config.fits.iter().enumerate() {
        let outcome = (|| -> Result<(FitResult, Vec<Option<f64>>)> {
            let noise_spec = spec.noise_spec(&noise)?;
            let model = ObservationModel::new(dynamics.clone(), noise_spec.clone())
                .with_engine(spec.engine)
                .with_solver(config.solver);
            let priors = spec.priors_for(&noise, m)?;
            let fit = sample_posterior(&model, &data, &priors, &config.sampler, fit_seed(config.seed, setting, replicate, k))?;
            // noise truths only when the fitted family matches the generating one
            let same_family = spec.p == noise.p() && spec.q == noise.q();
            let mut truths: Vec<Option<f64>> = config.truth.iter().map(|&t| Some(t)).collect();
            for name in noise_spec.free_names() {
                let t = if !same_family {
                    None
                } else if name == "sigma" {
                    Some(noise.sigma())
                } else if let Some(i) = name.strip_prefix("rho") {
                    Some(noise.rho()[i.parse::<usize>().map_or(0, |i| i - 1)])
                } else {
                    name.strip_prefix("phi").map(|i| noise.phi()[i.parse::<usize>().map_or(0, |i| i - 1)])
                };
                truths.push(t);
            }
            Ok((fit, truths))
        })();
        match outcome {
            Ok((fit, truths)) => {
                variances.push(Some(fit.summaries[..m].iter().map(|s| s.sd * s.sd).collect()));
                fits.push(FitOutcome {
                    label: spec.label.clone(),
                    error: None,
                    params: score(&fit, &truths),
                    acceptance: fit.acceptance.iter().sum::<f64>() / fit.acceptance.len() as f64,
                });
            }
            Err(e) => {
                variances.push(None);
                fits.push(FitOutcome { label: spec.label.clone(), error: Some(e.to_string()), params: vec![], acceptance: 0.0 });
            }
        }
    }

    let mut vir = Vec::new();
    if let Some((num, den)) = config.vir_labels() {
        let idx = |l: &str| config.fits.iter().position(|f| f.label == l);
        if let (Some(a), Some(b)) = (idx(&num), idx(&den)) {
            if let (Some(va), Some(vb)) = (&variances[a], &variances[b]) {
                for (j, name) in dynamics.param_names().into_iter().enumerate() {
                    vir.push(VirRecord { parameter: name, empirical: va[j] / vb[j] });
                }
            }
        }
    }
    Ok(ReplicateRecord { setting, replicate, seed, noise, fits, vir })
}

/// Runs every (setting, replicate) pair. Output order is canonical.
pub fn run_replicates(config: &ExperimentConfig) -> Result<Vec<ReplicateRecord>> {
    config.validate()?;
    let dynamics = config.model.build()?;
    let grid = grid(config)?;
    let jobs: Vec<(usize, usize)> =
        (0..config.noise_grid.len()).flat_map(|s| (0..config.replicates).map(move |r| (s, r))).collect();
    jobs.par_iter().map(|&(s, r)| run_replicate(config, &dynamics, &grid, s, r)).collect()
}

/// Theoretical VIR per setting and dynamical parameter.
pub fn theory(config: &ExperimentConfig) -> Result<Vec<TheoryRow>> {
    let dynamics = config.model.build()?;
    let grid = grid(config)?;
    let names = dynamics.param_names();
    let sens = match config.model {
        crate::experiments::ModelSpec::Constant => None,
        _ => {
            let tr = sensitivities(dynamics.as_ref(), &config.truth, &grid, SensitivityMethod::ForwardOde, &Default::default())?;
            tr.sensitivities.map(|s| s.matrix)
        }
    };
    let mut rows = Vec::new();
    for (s, noise) in config.noise_grid.iter().enumerate() {
        let asymptotic = vir_arma_pq_constant(noise)?;
        let exact = match (noise.kind(), &sens) {
            (NoiseKind::Ar1, Some(sm)) => Some(match config.model.initial_state_index() {
                Some(x0) => vir_initial_state(sm, &names, x0, noise.rho()[0])?,
                None => vir_multiparam_exact(sm, &names, noise.rho()[0])?,
            }),
            (NoiseKind::Ar1, None) => {
                let ones = nalgebra::DMatrix::from_element(config.length, 1, 1.0);
                Some(vir_multiparam_exact(&ones, &names, noise.rho()[0])?)
            }
            _ => None,
        };
        for (j, name) in names.iter().enumerate() {
            rows.push(TheoryRow { setting: s, parameter: name.clone(), asymptotic, exact: exact.as_ref().map(|v| v[j]) });
        }
    }
    Ok(rows)
}
