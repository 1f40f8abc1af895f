//! Residual diagnosis: fit with IID noise, inspect the residual
//! autocorrelation, select an ARMA noise model by AIC and refit.

mod acf;
mod aic;

pub use acf::{acf_diagnostic, AcfReport, AcfRow, DEFAULT_MAX_LAG, FLAG_FRACTION, FLAG_LAGS};
pub use aic::{
    arma_from_unconstrained, arma_grid_search, fit_arma, recommend, AicRow, AicTable, Recommendation,
    COMPLEX_ORDER, DEFAULT_PARSIMONY,
};

use crate::infer::{optimize_map, FitResult, OptimizeConfig, Prior};
use crate::likelihood::{kalman, Engine, KalmanInit, NoiseSpec, ObservationModel, StateSpaceForm};
use crate::{Error, NoiseModel, Result, TimeSeries};
use serde::{Deserialize, Serialize};

/// `x(t) - f(t; θ̂)` at the fit's point estimate, on the data grid.
pub fn compute_residuals(data: &TimeSeries, fit: &FitResult, model: &ObservationModel) -> Result<TimeSeries> {
    if fit.point.len() != model.dim() {
        return Err(Error::InvalidArgument(format!(
            "fit has {} parameters, model expects {}",
            fit.point.len(),
            model.dim()
        )));
    }
    data.with_values(model.residuals(data, &fit.point)?)
}

/// One-step Kalman prediction errors scaled by `√F(t)`.
pub fn innovation_residuals(residuals: &TimeSeries, noise: &NoiseModel) -> Result<TimeSeries> {
    let ssf = StateSpaceForm::arma(noise, KalmanInit::Stationary)?;
    let out = kalman(residuals.values(), &ssf, false)?;
    residuals.with_values(out.standardized())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnoseConfig {
    pub max_lag: usize,
    pub confidence: f64,
    pub p_max: usize,
    pub q_max: usize,
    pub parsimony: f64,
    pub optimize: OptimizeConfig,
    /// Refit the dynamics under the recommended noise model.
    pub refit: bool,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        Self {
            max_lag: DEFAULT_MAX_LAG,
            confidence: 0.95,
            p_max: 2,
            q_max: 2,
            parsimony: DEFAULT_PARSIMONY,
            optimize: OptimizeConfig { restarts: 4, ..Default::default() },
            refit: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnosis {
    pub iid_fit: FitResult,
    pub residual_acf: AcfReport,
    pub aic: AicTable,
    pub recommendation: Recommendation,
    pub refit: Option<FitResult>,
    /// ACF of the refit's standardized innovations.
    pub innovation_acf: Option<AcfReport>,
}

impl Diagnosis {
    pub fn refit_is_white(&self) -> Option<bool> {
        self.innovation_acf.as_ref().map(AcfReport::passes_white_noise_check)
    }
}

/// Loose priors for noise parameters: σ log-normal around `scale`,
/// coefficients uniform on (-1, 1).
pub fn default_noise_priors(spec: &NoiseSpec, scale: f64) -> Vec<Prior> {
    spec.free_names()
        .iter()
        .map(|n| if n == "sigma" { Prior::log_normal(scale.max(1e-12).ln(), 2.0) } else { Prior::uniform(-1.0, 1.0) })
        .collect()
}

/// The four-step pipeline. `dynamics_priors` covers the dynamical
/// parameters only; noise priors come from [`default_noise_priors`].
pub fn diagnose(
    model: &ObservationModel,
    data: &TimeSeries,
    dynamics_priors: &[Prior],
    config: &DiagnoseConfig,
    seed: u64,
) -> Result<Diagnosis> {
    let scale = data.sample_variance().sqrt();
    let iid = ObservationModel { noise: NoiseSpec::iid(), engine: Engine::Conditional, ..model.clone() };
    let mut priors = dynamics_priors.to_vec();
    priors.extend(default_noise_priors(&iid.noise, scale));
    let iid_fit = optimize_map(&iid, data, &priors, seed, &config.optimize)?;

    let res = compute_residuals(data, &iid_fit, &iid)?;
    let residual_acf = acf_diagnostic(&res, config.max_lag.min(res.len() - 1), config.confidence)?;
    let aic = arma_grid_search(res.values(), config.p_max, config.q_max)?;
    let recommendation = recommend(&aic, config.parsimony)?;

    let (refit, innovation_acf) = if config.refit {
        let spec = NoiseSpec::orders(recommendation.p, recommendation.q);
        let m = ObservationModel { noise: spec.clone(), engine: Engine::Kalman, ..model.clone() };
        let mut priors = dynamics_priors.to_vec();
        priors.extend(default_noise_priors(&spec, recommendation.sigma));
        let m_dyn = model.dynamics.param_dim();
        let mut start = iid_fit.point[..m_dyn].to_vec();
        start.push(recommendation.sigma);
        start.extend(&recommendation.rho);
        start.extend(&recommendation.phi);
        let opt = OptimizeConfig { start: Some(start), ..config.optimize.clone() };
        let fit = optimize_map(&m, data, &priors, crate::seed::derive_seed(seed, &[1]), &opt)?;
        let (_, noise) = m.split(&fit.point)?;
        let innov = innovation_residuals(&compute_residuals(data, &fit, &m)?, &noise)?;
        let acf = acf_diagnostic(&innov, config.max_lag.min(innov.len() - 1), config.confidence)?;
        (Some(fit), Some(acf))
    } else {
        (None, None)
    };

    Ok(Diagnosis { iid_fit, residual_acf, aic, recommendation, refit, innovation_acf })
}
