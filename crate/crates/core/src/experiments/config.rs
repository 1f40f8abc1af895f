use crate::infer::{InitStrategy, OptimizeConfig, Prior, SamplerConfig};
use crate::likelihood::{Engine, NoiseSpec};
use crate::odes::{ConstantModel, DynamicalModel, HergModel, LogisticModel, Solver, VoltageProtocol};
use crate::{Error, NoiseModel, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Constant,
    Logistic,
    Herg {
        /// Protocol CSV; the built-in staircase when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        protocol: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reversal_mv: Option<f64>,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<Arc<dyn DynamicalModel>> {
        Ok(match self {
            ModelSpec::Constant => Arc::new(ConstantModel),
            ModelSpec::Logistic => Arc::new(LogisticModel),
            ModelSpec::Herg { protocol, reversal_mv } => {
                let p = match protocol {
                    Some(path) => VoltageProtocol::from_csv_file(path)?,
                    None => VoltageProtocol::synthetic_staircase(),
                };
                match reversal_mv {
                    Some(e) => Arc::new(HergModel::with_reversal(p, *e)),
                    None => Arc::new(HergModel::new(p)),
                }
            }
        })
    }

    /// Index of the initial-state parameter, if the model estimates one.
    pub fn initial_state_index(&self) -> Option<usize> {
        matches!(self, ModelSpec::Logistic).then_some(2)
    }
}

/// One candidate noise model fitted to every dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    pub label: String,
    #[serde(default)]
    pub p: usize,
    #[serde(default)]
    pub q: usize,
    /// Fix the AR / MA coefficients at the generating values instead of fitting them.
    #[serde(default)]
    pub supply_coefficients: bool,
    /// Priors for the free parameters in layout order: dynamics, σ, ρ…, φ….
    pub priors: Vec<Prior>,
    /// Replaces the σ prior by a positive normal centred on the generating
    /// process's marginal standard deviation, with this spread.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marginal_sigma_prior_sd: Option<f64>,
    #[serde(default)]
    pub engine: Engine,
}

impl FitSpec {
    pub fn noise_spec(&self, generating: &NoiseModel) -> Result<NoiseSpec> {
        let mut spec = NoiseSpec::orders(self.p, self.q);
        if self.supply_coefficients {
            if generating.p() != self.p || generating.q() != self.q {
                return Err(Error::Config(format!(
                    "fit {:?} supplies coefficients but its orders ({}, {}) differ from the generating ({}, {})",
                    self.label,
                    self.p,
                    self.q,
                    generating.p(),
                    generating.q()
                )));
            }
            spec = spec.with_fixed_rho(generating.rho().to_vec()).with_fixed_phi(generating.phi().to_vec());
        }
        Ok(spec)
    }

    pub fn priors_for(&self, generating: &NoiseModel, dynamics_dim: usize) -> Result<Vec<Prior>> {
        let mut priors = self.priors.clone();
        if let Some(sd) = self.marginal_sigma_prior_sd {
            let marginal = crate::noise::process_variance(generating)?.sqrt();
            let slot = priors
                .get_mut(dynamics_dim)
                .ok_or_else(|| Error::Config(format!("fit {:?} has no σ prior to replace", self.label)))?;
            *slot = Prior::truncated_normal(marginal, sd, 0.0, f64::INFINITY);
        }
        Ok(priors)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: ModelSpec,
    /// Generating dynamical parameters.
    pub truth: Vec<f64>,
    /// Generating noise processes; one setting each.
    pub noise_grid: Vec<NoiseModel>,
    pub replicates: usize,
    pub length: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub fits: Vec<FitSpec>,
    pub sampler: SamplerConfig,
    /// `(numerator, denominator)` fit labels of the posterior VIR.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vir_pair: Option<(String, String)>,
    pub seed: u64,
    #[serde(default)]
    pub solver: Solver,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let dynamics = self.model.build()?;
        dynamics.check_params(&self.truth)?;
        if self.noise_grid.is_empty() || self.fits.is_empty() || self.replicates == 0 {
            return Err(Error::Config("need at least one noise setting, fit and replicate".into()));
        }
        if self.length < 10 || !(self.t_end > self.t_start) {
            return Err(Error::Config("need at least 10 observations on a positive window".into()));
        }
        self.sampler.validate()?;
        let mut labels: Vec<&str> = self.fits.iter().map(|f| f.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("fit labels must be unique".into()));
        }
        for f in &self.fits {
            for g in &self.noise_grid {
                let spec = f.noise_spec(g)?;
                let want = dynamics.param_dim() + spec.free_names().len();
                if f.priors.len() != want {
                    return Err(Error::Config(format!(
                        "fit {:?}: {} priors for {want} free parameters",
                        f.label,
                        f.priors.len()
                    )));
                }
            }
        }
        if let Some((a, b)) = &self.vir_pair {
            for l in [a, b] {
                if !self.fits.iter().any(|f| &f.label == l) {
                    return Err(Error::Config(format!("VIR pair names unknown fit {l:?}")));
                }
            }
        }
        Ok(())
    }

    /// Explicit pair, else the first non-IID fit over the first IID fit.
    pub fn vir_labels(&self) -> Option<(String, String)> {
        if let Some(p) = &self.vir_pair {
            return Some(p.clone());
        }
        let iid = self.fits.iter().find(|f| f.p == 0 && f.q == 0)?;
        let other = self.fits.iter().find(|f| f.p + f.q > 0)?;
        Some((other.label.clone(), iid.label.clone()))
    }

    /// Logistic growth with AR(1) noise, fitted with AR(1) and IID models.
    pub fn logistic(paper_scale: bool) -> Self {
        let rhos: &[f64] = if paper_scale { &[0.8, 0.85, 0.9, 0.95, 0.975] } else { &[0.8, 0.9, 0.975] };
        let dynamics = vec![
            Prior::truncated_normal(1.0, 1.0, 0.0, 100.0),
            Prior::truncated_normal(50.0, 20.0, 0.0, 100.0),
            Prior::truncated_normal(1.0, 0.5, 0.0, 10.0),
        ];
        let mut ar1 = dynamics.clone();
        ar1.push(Prior::truncated_normal(1.0, 1.0, 0.0, f64::INFINITY));
        ar1.push(Prior::truncated_normal(0.0, 0.5, -1.0, 0.99));
        let mut iid = dynamics;
        iid.push(Prior::truncated_normal(1.0, 1.0, 0.0, f64::INFINITY));
        ExperimentConfig {
            name: "logistic".into(),
            model: ModelSpec::Logistic,
            truth: vec![0.5, 50.0, 1.0],
            noise_grid: rhos.iter().map(|&r| NoiseModel::ar1(1.0, r).expect("stationary")).collect(),
            replicates: if paper_scale { 10 } else { 5 },
            length: if paper_scale { 2000 } else { 500 },
            t_start: 0.0,
            t_end: 20.0,
            fits: vec![
                FitSpec {
                    label: "ar1".into(),
                    p: 1,
                    q: 0,
                    supply_coefficients: false,
                    priors: ar1,
                    marginal_sigma_prior_sd: None,
                    engine: Engine::Conditional,
                },
                FitSpec {
                    label: "iid".into(),
                    p: 0,
                    q: 0,
                    supply_coefficients: false,
                    priors: iid,
                    marginal_sigma_prior_sd: Some(1.0),
                    engine: Engine::Conditional,
                },
            ],
            sampler: desk_sampler(),
            vir_pair: Some(("ar1".into(), "iid".into())),
            seed: 20_240_501,
            solver: Solver::Numerical,
            out: None,
        }
    }

    /// Constant mean with MA(1) noise; φ supplied to the MA(1) fit.
    pub fn ma1(paper_scale: bool) -> Self {
        let phis: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        let grid = phis.iter().map(|&f| NoiseModel::ma1(0.1, f).expect("valid")).collect();
        constant_study("ma1", grid, 0, 1, paper_scale)
    }

    /// Constant mean with ARMA(1,1) noise; ρ and φ supplied to the ARMA fit.
    pub fn arma11(paper_scale: bool) -> Self {
        let levels: &[f64] = if paper_scale { &[0.1, 0.3, 0.5, 0.7, 0.9] } else { &[0.1, 0.5, 0.9] };
        let grid = levels
            .iter()
            .flat_map(|&r| levels.iter().map(move |&f| NoiseModel::arma(0.1, vec![r], vec![f]).expect("valid")))
            .collect();
        constant_study("arma11", grid, 1, 1, paper_scale)
    }

    pub fn preset(name: &str, paper_scale: bool) -> Result<Self> {
        match name {
            "logistic" => Ok(Self::logistic(paper_scale)),
            "ma1" => Ok(Self::ma1(paper_scale)),
            "arma11" => Ok(Self::arma11(paper_scale)),
            other => Err(Error::Config(format!("unknown preset {other:?} (logistic, ma1, arma11)"))),
        }
    }
}

fn desk_sampler() -> SamplerConfig {
    SamplerConfig {
        chains: 4,
        iterations: 10_000,
        warmup: None,
        init: InitStrategy::Map,
        target_acceptance: 0.234,
        optimize: OptimizeConfig { restarts: 3, ..Default::default() },
    }
}

fn constant_study(name: &str, grid: Vec<NoiseModel>, p: usize, q: usize, paper_scale: bool) -> ExperimentConfig {
    let priors = vec![Prior::uniform(-100.0, 100.0), Prior::uniform(0.0, 100.0)];
    ExperimentConfig {
        name: name.into(),
        model: ModelSpec::Constant,
        truth: vec![10.0],
        noise_grid: grid,
        replicates: 10,
        length: 1000,
        t_start: 0.0,
        t_end: 999.0,
        fits: vec![
            FitSpec {
                label: name.into(),
                p,
                q,
                supply_coefficients: true,
                priors: priors.clone(),
                marginal_sigma_prior_sd: None,
                engine: Engine::Conditional,
            },
            FitSpec {
                label: "iid".into(),
                p: 0,
                q: 0,
                supply_coefficients: false,
                priors,
                marginal_sigma_prior_sd: None,
                engine: Engine::Conditional,
            },
        ],
        sampler: if paper_scale { SamplerConfig { iterations: 20_000, ..desk_sampler() } } else { desk_sampler() },
        vir_pair: Some((name.into(), "iid".into())),
        seed: 20_240_502,
        solver: Solver::ClosedForm,
        out: None,
    }
}
