use super::{psi_weights, NoiseModel, TimeSeries};
use crate::{Error, Result};

/// Autocovariances `gamma_0 ..= gamma_max_lag` of a stationary process.
///
/// Lags up to `m = max(p, q)` come from the truncated MA(infinity) sum
/// `sigma^2 sum_j psi_j psi_{j+k}`; beyond that the AR recursion
/// `gamma_k = sum_i rho_i gamma_{k-i}` is exact.
pub fn autocovariances(model: &NoiseModel, max_lag: usize) -> Result<Vec<f64>> {
    model.check_stationary()?;
    let (rho, phi) = (model.rho(), model.phi());
    let s2 = model.sigma() * model.sigma();
    let m = rho.len().max(phi.len()).min(max_lag);
    let psi = psi_weights(rho, phi, m);
    let n = psi.len() - m;
    let mut gamma = Vec::with_capacity(max_lag + 1);
    for k in 0..=m {
        let g: f64 = (0..n).map(|j| psi[j] * psi[j + k]).sum();
        gamma.push(s2 * g);
    }
    for k in m + 1..=max_lag {
        let g: f64 = rho.iter().enumerate().map(|(i, r)| r * gamma[k - i - 1]).sum();
        gamma.push(g);
    }
    Ok(gamma)
}

/// Autocorrelations `Gamma(1) ..= Gamma(max_lag)`.
pub fn theoretical_acf(model: &NoiseModel, max_lag: usize) -> Result<Vec<f64>> {
    if max_lag < 1 {
        return Err(Error::InvalidArgument("max_lag must be at least 1".into()));
    }
    let g = autocovariances(model, max_lag)?;
    Ok(g[1..].iter().map(|v| v / g[0]).collect())
}

/// Biased sample autocorrelation (denominator `sum (x - mean)^2`) at lags
/// `1 ..= max_lag`.
pub fn sample_acf(series: &TimeSeries, max_lag: usize) -> Result<Vec<f64>> {
    sample_acf_values(series.values(), max_lag)
}

pub(crate) fn sample_acf_values(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag < 1 || x.len() <= max_lag {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= max_lag < length, got max_lag = {max_lag}, length = {}",
            x.len()
        )));
    }
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let denom: f64 = d.iter().map(|v| v * v).sum();
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::InvalidSeries("series has zero variance; autocorrelation undefined".into()));
    }
    Ok((1..=max_lag)
        .map(|tau| d[tau..].iter().zip(&d[..n - tau]).map(|(a, b)| a * b).sum::<f64>() / denom)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{simulate_noise, DEFAULT_BURN_IN};
    use approx::assert_relative_eq;

    #[test]
    fn ar1_acf_is_geometric() {
        let m = NoiseModel::ar1(1.0, 0.5).unwrap();
        let acf = theoretical_acf(&m, 3).unwrap();
        assert_relative_eq!(acf[2], 0.125, epsilon = 1e-14);
    }

    #[test]
    fn ma1_acf_cuts_off() {
        for phi in [-0.8, 0.2, 0.7, 1.0] {
            let m = NoiseModel::ma1(1.3, phi).unwrap();
            let acf = theoretical_acf(&m, 4).unwrap();
            assert_relative_eq!(acf[0], phi / (1.0 + phi * phi), epsilon = 1e-14);
            assert_eq!(acf[1], 0.0);
            assert_eq!(acf[3], 0.0);
        }
    }

    #[test]
    fn arma11_lag_one_closed_form() {
        let (r, f) = (0.5, 0.3);
        let m = NoiseModel::arma(1.0, vec![r], vec![f]).unwrap();
        let acf = theoretical_acf(&m, 2).unwrap();
        let closed = (1.0 + r * f) * (r + f) / (1.0 + f * f + 2.0 * r * f);
        assert_relative_eq!(acf[0], closed, epsilon = 1e-13);
        assert_relative_eq!(acf[1], r * closed, epsilon = 1e-13);
    }

    #[test]
    fn arma11_lag_one_matches_long_simulation() {
        // Brute-force oracle: sample ACF of a 1e7-point path.
        let m = NoiseModel::arma(1.0, vec![0.5], vec![0.3]).unwrap();
        let n = 10_000_000;
        let s = simulate_noise(&m, n, 2024, DEFAULT_BURN_IN).unwrap();
        let emp = sample_acf(&s, 1).unwrap()[0];
        // Bartlett: var(r_1) = (1/n) sum_{k>=1} (r_{k+1} + r_{k-1} - 2 r_1 r_k)^2,
        // half of the symmetric sum over all k
        let r = theoretical_acf(&m, 400).unwrap();
        let at = |k: i64| if k == 0 { 1.0 } else { r[(k.unsigned_abs() - 1) as usize] };
        let v: f64 = (-398i64..=398)
            .map(|k| (at(k + 1) + at(k - 1) - 2.0 * at(1) * at(k)).powi(2))
            .sum::<f64>()
            / 2.0;
        let se = (v / n as f64).sqrt();
        assert!((emp - r[0]).abs() < 3.0 * se, "{emp} vs {} (se {se})", r[0]);
        // (1 + 0.15)(0.8) / 1.39
        assert_relative_eq!(r[0], 0.661_870_503_597_122_3, epsilon = 1e-12);
    }

    #[test]
    fn alternating_series() {
        // Oracle value computed by direct evaluation of the estimator:
        // mean 0, numerator -(n - 1), denominator n.
        let x: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let s = TimeSeries::from_values(x).unwrap();
        let acf = sample_acf(&s, 2).unwrap();
        assert_relative_eq!(acf[0], -0.999, epsilon = 1e-15);
        assert_relative_eq!(acf[1], 0.998, epsilon = 1e-15);
    }

    #[test]
    fn degenerate_inputs() {
        let flat = TimeSeries::from_values(vec![3.0; 50]).unwrap();
        assert!(sample_acf(&flat, 5).is_err());
        let mut spike = vec![3.0; 50];
        spike[20] = 4.0;
        let s = TimeSeries::from_values(spike).unwrap();
        let acf = sample_acf(&s, 5).unwrap();
        assert!(acf.iter().all(|v| v.is_finite()));
        assert!(sample_acf(&s, 50).is_err());
        assert!(sample_acf(&s, 0).is_err());
    }

    #[test]
    fn ar1_sample_acf_near_rho() {
        let m = NoiseModel::ar1(1.0, 0.9).unwrap();
        let n = 200_000;
        let s = simulate_noise(&m, n, 3, DEFAULT_BURN_IN).unwrap();
        let emp = sample_acf(&s, 1).unwrap()[0];
        let se = ((1.0 - 0.81) / n as f64).sqrt();
        assert!((emp - 0.9).abs() < 3.0 * se, "{emp}");
    }

    #[test]
    fn general_arma_autocovariance_recursion() {
        // AR(2) closed form: gamma_0 = s2 (1 - r2) / ((1 + r2)((1 - r2)^2 - r1^2))
        let (r1, r2) = (0.5, 0.2);
        let m = NoiseModel::arma(1.0, vec![r1, r2], vec![]).unwrap();
        let g = autocovariances(&m, 5).unwrap();
        let g0 = (1.0 - r2) / ((1.0 + r2) * ((1.0 - r2).powi(2) - r1 * r1));
        assert_relative_eq!(g[0], g0, epsilon = 1e-13);
        assert_relative_eq!(g[1], r1 / (1.0 - r2) * g0, epsilon = 1e-13);
        assert_relative_eq!(g[4], r1 * g[3] + r2 * g[2], epsilon = 1e-15);
    }
}
