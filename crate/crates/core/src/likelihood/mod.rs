//! Log-likelihoods of `x(t) = f(t; θ) + ε(t)` under the supported noise
//! processes. Every engine works on the residual series `ε = x − f`, so a
//! single trajectory can be reused across noise-parameter proposals.

mod conditional;
mod exact;
mod kalman;
mod observation;

pub use conditional::{ar1_conditional, arma11_conditional, iid};
pub use exact::exact_mvn;
pub use observation::{NoiseSpec, ObservationModel};
pub use kalman::{kalman, kalman_concentrated, KalmanInit, KalmanOutput, StateSpaceForm, DIFFUSE_KAPPA};

use crate::odes::Trajectory;
use crate::{Error, NoiseKind, NoiseModel, Result, TimeSeries};
use serde::{Deserialize, Serialize};

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// A log-likelihood value with optional per-observation contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLikelihood {
    pub value: f64,
    pub per_step: Option<Vec<f64>>,
    /// Leading observations used only as lags or initial conditions.
    pub conditioned_steps: usize,
}

impl LogLikelihood {
    pub(crate) fn from_steps(steps: Vec<f64>, conditioned_steps: usize, keep: bool) -> Self {
        let value = steps.iter().sum();
        Self { value, per_step: keep.then_some(steps), conditioned_steps }
    }
}

/// Which likelihood to use for a noise model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Innovations conditioned on zero pre-sample values. Available for IID,
    /// AR(1), MA(1) and ARMA(1,1).
    #[default]
    Conditional,
    /// Exact Gaussian likelihood through the Kalman filter.
    Kalman,
    /// Dense multivariate normal; `T ≤ 2000`.
    Exact,
}

/// Residuals `x − f` after checking that the grids agree.
pub fn residuals(obs: &TimeSeries, f: &Trajectory) -> Result<Vec<f64>> {
    if obs.len() != f.len() {
        return Err(Error::GridMismatch { data: obs.len(), trajectory: f.len() });
    }
    if !obs.same_grid(&f.grid) {
        return Err(Error::InvalidSeries("observation and trajectory time grids differ".into()));
    }
    Ok(obs.values().iter().zip(f.values()).map(|(x, m)| x - m).collect())
}

/// Log-likelihood of residuals `eps` under `noise` using `engine`.
pub fn noise_loglik(eps: &[f64], noise: &NoiseModel, engine: Engine) -> Result<LogLikelihood> {
    let s = noise.sigma();
    match engine {
        Engine::Conditional => match noise.kind() {
            NoiseKind::Iid => iid(eps, s, false),
            NoiseKind::Ar1 => ar1_conditional(eps, s, noise.rho()[0], false),
            NoiseKind::Ma1 => arma11_conditional(eps, s, 0.0, noise.phi()[0], false),
            NoiseKind::Arma if noise.p() <= 1 && noise.q() <= 1 => {
                let rho = noise.rho().first().copied().unwrap_or(0.0);
                let phi = noise.phi().first().copied().unwrap_or(0.0);
                arma11_conditional(eps, s, rho, phi, false)
            }
            NoiseKind::Arma => Err(Error::InvalidArgument(format!(
                "no conditional likelihood for {}; use the kalman engine",
                noise.label()
            ))),
        },
        Engine::Kalman => {
            let ssf = StateSpaceForm::arma(noise, KalmanInit::Stationary)?;
            Ok(kalman(eps, &ssf, false)?.loglik)
        }
        Engine::Exact => exact_mvn(eps, noise),
    }
}

/// `Σ log N(xₜ | fₜ, σ)`.
pub fn loglik_iid(obs: &TimeSeries, f: &Trajectory, sigma: f64) -> Result<LogLikelihood> {
    iid(&residuals(obs, f)?, sigma, true)
}

/// Conditional AR(1) likelihood; the first observation serves only as a lag.
pub fn loglik_ar1_conditional(obs: &TimeSeries, f: &Trajectory, sigma: f64, rho: f64) -> Result<LogLikelihood> {
    ar1_conditional(&residuals(obs, f)?, sigma, rho, true)
}

/// Conditional ARMA(1,1) likelihood with `ν(1) = ν(2) = 0`.
pub fn loglik_arma11_conditional(
    obs: &TimeSeries,
    f: &Trajectory,
    sigma: f64,
    rho: f64,
    phi: f64,
) -> Result<LogLikelihood> {
    arma11_conditional(&residuals(obs, f)?, sigma, rho, phi, true)
}

pub fn kalman_loglik(obs: &TimeSeries, f: &Trajectory, ssf: &StateSpaceForm) -> Result<LogLikelihood> {
    Ok(kalman(&residuals(obs, f)?, ssf, true)?.loglik)
}

pub fn exact_mvn_loglik(obs: &TimeSeries, f: &Trajectory, noise: &NoiseModel) -> Result<LogLikelihood> {
    exact_mvn(&residuals(obs, f)?, noise)
}
