use super::check_rho;
use crate::noise::simulate_noise_with_rng;
use crate::odes::{sensitivities, DynamicalModel, SensitivityMethod, Tolerances};
use crate::seed::{derive_seed, rng_from_seed};
use crate::{Error, NoiseModel, Result, TimeSeries};
use nalgebra::DMatrix;
use serde::Serialize;

/// Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
}

impl McEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        Self { mean, se: (var / n).sqrt() }
    }

    /// Whether zero lies within `k` standard errors of the mean.
    pub fn covers_zero(&self, k: f64) -> bool {
        self.mean.abs() <= k * self.se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuisanceReport {
    pub labels: Vec<String>,
    /// `E[−∂²L/∂σ∂θᵢ]`.
    pub sigma_cross: Vec<McEstimate>,
    /// `E[−∂²L/∂ρ∂θᵢ]`.
    pub rho_cross: Vec<McEstimate>,
    pub datasets: usize,
    /// Every cross term within 4 standard errors of zero.
    pub passed: bool,
}

/// Observed cross second derivatives of the conditional AR(1) likelihood at
/// the true parameters, for residuals `eps` (`t = 0..T`) and sensitivity rows
/// `sens` on the same grid. Returns `(σ–θ, ρ–θ)` terms per column.
pub(crate) fn cross_terms(eps: &[f64], sens: &DMatrix<f64>, sigma: f64, rho: f64) -> (Vec<f64>, Vec<f64>) {
    let m = sens.ncols();
    let (mut st, mut rt) = (vec![0.0; m], vec![0.0; m]);
    for t in 1..eps.len() {
        let nu = eps[t] - rho * eps[t - 1];
        for i in 0..m {
            let d = sens[(t, i)] - rho * sens[(t - 1, i)];
            st[i] += nu * d;
            rt[i] += eps[t - 1] * d + nu * sens[(t - 1, i)];
        }
    }
    let s2 = sigma * sigma;
    (st.iter().map(|v| 2.0 * v / (s2 * sigma)).collect(), rt.iter().map(|v| v / s2).collect())
}

/// Simulates `datasets` AR(1)-corrupted observations of `model` and checks
/// that the σ–θ and ρ–θ information terms average to zero.
#[allow(clippy::too_many_arguments)]
pub fn nuisance_orthogonality_check(
    model: &dyn DynamicalModel,
    params: &[f64],
    grid: &TimeSeries,
    sigma: f64,
    rho: f64,
    datasets: usize,
    seed: u64,
) -> Result<NuisanceReport> {
    check_rho(rho)?;
    if datasets < 2 {
        return Err(Error::InvalidArgument("need at least two datasets".into()));
    }
    let tr = sensitivities(model, params, grid, SensitivityMethod::ForwardOde, &Tolerances::default())?;
    let crate::odes::Sensitivities { names: labels, matrix: sens } = tr.sensitivities.expect("sensitivities requested");
    let noise = NoiseModel::ar1(sigma, rho)?;
    let m = sens.ncols();
    let mut s_samples = vec![Vec::with_capacity(datasets); m];
    let mut r_samples = vec![Vec::with_capacity(datasets); m];
    for k in 0..datasets {
        let mut rng = rng_from_seed(derive_seed(seed, &[k as u64]));
        let eps = simulate_noise_with_rng(&noise, grid.len(), crate::noise::DEFAULT_BURN_IN, &mut rng);
        let (s, r) = cross_terms(&eps, &sens, sigma, rho);
        for i in 0..m {
            s_samples[i].push(s[i]);
            r_samples[i].push(r[i]);
        }
    }
    let sigma_cross: Vec<McEstimate> = s_samples.iter().map(|x| McEstimate::from_samples(x)).collect();
    let rho_cross: Vec<McEstimate> = r_samples.iter().map(|x| McEstimate::from_samples(x)).collect();
    let passed = sigma_cross.iter().chain(&rho_cross).all(|e| e.covers_zero(4.0));
    Ok(NuisanceReport { labels, sigma_cross, rho_cross, datasets, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::ar1_conditional;
    use crate::odes::{ConstantModel, LogisticModel};

    #[test]
    fn zero_residuals_give_zero_sigma_term() {
        let sens = DMatrix::from_element(20, 2, 0.7);
        let (s, _) = cross_terms(&[0.0; 20], &sens, 1.3, 0.5);
        assert!(s.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn analytic_cross_terms_match_differences() {
        // constant mean: f = μ, ∂f/∂μ = 1
        let x = [10.3, 9.7, 10.9, 10.1, 9.2, 10.4, 10.8];
        let (mu, sigma, rho) = (10.05, 0.6, 0.45);
        let ll = |mu: f64, s: f64, r: f64| {
            let eps: Vec<f64> = x.iter().map(|v| v - mu).collect();
            ar1_conditional(&eps, s, r, false).unwrap().value
        };
        let h = 1e-4;
        let mixed = |a: &dyn Fn(f64, f64) -> f64| (a(h, h) - a(h, -h) - a(-h, h) + a(-h, -h)) / (4.0 * h * h);
        let fd_sigma = -mixed(&|dm, ds| ll(mu + dm, sigma + ds, rho));
        let fd_rho = -mixed(&|dm, dr| ll(mu + dm, sigma, rho + dr));
        let eps: Vec<f64> = x.iter().map(|v| v - mu).collect();
        let (s, r) = cross_terms(&eps, &DMatrix::from_element(x.len(), 1, 1.0), sigma, rho);
        assert!((s[0] - fd_sigma).abs() < 1e-5 * fd_sigma.abs().max(1.0), "{} vs {fd_sigma}", s[0]);
        assert!((r[0] - fd_rho).abs() < 1e-5 * fd_rho.abs().max(1.0), "{} vs {fd_rho}", r[0]);
    }

    #[test]
    fn constant_model_is_orthogonal() {
        let grid = TimeSeries::grid(0.0, 49.0, 50).unwrap();
        let rep = nuisance_orthogonality_check(&ConstantModel, &[10.0], &grid, 0.5, 0.7, 2000, 11).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn logistic_model_is_orthogonal() {
        let grid = TimeSeries::grid(0.0, 20.0, 50).unwrap();
        let rep = nuisance_orthogonality_check(&LogisticModel, &[0.5, 50.0, 1.0], &grid, 1.0, 0.9, 2000, 3).unwrap();
        assert_eq!(rep.labels, ["r", "kappa", "x0"]);
        assert!(rep.passed, "{rep:?}");
    }
}
