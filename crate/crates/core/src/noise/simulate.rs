use rand::Rng as _;
use rand_distr::StandardNormal;

use super::{NoiseModel, TimeSeries};
use crate::seed::{rng_from_seed, Rng};
use crate::{Error, Result};

/// Samples discarded before the returned path so it starts (numerically)
/// from the stationary distribution.
pub const DEFAULT_BURN_IN: usize = 1000;

/// IID `N(0, sigma^2)` innovations (ziggurat sampler).
pub fn draw_innovations(rng: &mut Rng, sigma: f64, n: usize) -> Vec<f64> {
    (0..n).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Runs the ARMA recursion over an innovation stream with all pre-sample
/// values set to zero.
pub fn filter_innovations(model: &NoiseModel, innovations: &[f64]) -> Vec<f64> {
    let (rho, phi) = (model.rho(), model.phi());
    let mut eps = Vec::with_capacity(innovations.len());
    for t in 0..innovations.len() {
        let mut e = innovations[t];
        for (j, f) in phi.iter().enumerate() {
            if t > j {
                e += f * innovations[t - j - 1];
            }
        }
        for (i, r) in rho.iter().enumerate() {
            if t > i {
                e += r * eps[t - i - 1];
            }
        }
        eps.push(e);
    }
    eps
}

/// Draws `n` values of the process after `burn_in` discarded samples,
/// consuming the caller's generator.
pub fn simulate_noise_with_rng(
    model: &NoiseModel,
    n: usize,
    burn_in: usize,
    rng: &mut Rng,
) -> Vec<f64> {
    let nu = draw_innovations(rng, model.sigma(), n + burn_in);
    let mut eps = filter_innovations(model, &nu);
    eps.drain(..burn_in);
    eps
}

/// Seeded simulation on a unit-step grid starting at `t = 0`.
pub fn simulate_noise(model: &NoiseModel, n: usize, seed: u64, burn_in: usize) -> Result<TimeSeries> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    model.check_stationary()?;
    let mut rng = rng_from_seed(seed);
    TimeSeries::from_values(simulate_noise_with_rng(model, n, burn_in, &mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::process_variance;

    fn mc_variance_check(model: &NoiseModel, n: usize, seed: u64, n_se: f64) {
        let s = simulate_noise(model, n, seed, DEFAULT_BURN_IN).unwrap();
        let target = process_variance(model).unwrap();
        // Var of the sample variance of a Gaussian linear process is
        // 2/n * sum_k gamma_k^2; use the autocovariances to size the band.
        let gam = crate::noise::autocovariances(model, 2000).unwrap();
        let s2: f64 = gam[0] * gam[0] + 2.0 * gam[1..].iter().map(|g| g * g).sum::<f64>();
        let se = (2.0 * s2 / n as f64).sqrt();
        let got = s.sample_variance();
        assert!(
            (got - target).abs() < n_se * se,
            "{}: sample var {got}, expected {target} (se {se})",
            model.label()
        );
    }

    #[test]
    fn iid_variance() {
        mc_variance_check(&NoiseModel::iid(1.0).unwrap(), 100_000, 11, 3.0);
    }

    #[test]
    fn ar1_variance_is_four_thirds() {
        let m = NoiseModel::ar1(1.0, 0.5).unwrap();
        assert!((process_variance(&m).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        mc_variance_check(&m, 100_000, 12, 3.0);
    }

    #[test]
    fn arma11_variance() {
        let m = NoiseModel::arma(1.0, vec![0.5], vec![0.3]).unwrap();
        let expected = (1.0 + 0.09 + 0.3) / 0.75;
        assert!((process_variance(&m).unwrap() - expected).abs() < 1e-14);
        assert!((expected - 1.853_333_333_333_333).abs() < 1e-12);
        mc_variance_check(&m, 100_000, 13, 3.0);
    }

    #[test]
    fn identical_seeds_identical_paths() {
        let m = NoiseModel::arma(0.7, vec![0.4], vec![0.2]).unwrap();
        let a = simulate_noise(&m, 500, 99, 100).unwrap();
        let b = simulate_noise(&m, 500, 99, 100).unwrap();
        let c = simulate_noise(&m, 500, 100, 100).unwrap();
        assert_eq!(a.values(), b.values());
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn koyck_equivalence() {
        // AR(1) equals MA(infinity) with coefficients rho^k; truncating at
        // k = 200 leaves 0.5^201 relative error.
        let rho: f64 = 0.5;
        let ar = NoiseModel::ar1(1.0, rho).unwrap();
        let ma = NoiseModel::arma(1.0, vec![], (1..=200).map(|k| rho.powi(k)).collect()).unwrap();
        let mut rng = rng_from_seed(5);
        let nu = draw_innovations(&mut rng, 1.0, 5000);
        let a = filter_innovations(&ar, &nu);
        let b = filter_innovations(&ma, &nu);
        for t in 1000..5000 {
            assert!((a[t] - b[t]).abs() < 1e-12, "t = {t}: {} vs {}", a[t], b[t]);
        }
    }

    #[test]
    fn zero_length_rejected() {
        let m = NoiseModel::iid(1.0).unwrap();
        assert!(simulate_noise(&m, 0, 1, 0).is_err());
    }
}
