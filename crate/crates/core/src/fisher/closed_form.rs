use super::check_rho;
use crate::noise::process_variance;
use crate::{Error, NoiseModel, Result};

/// Information about a constant mean under AR(1) noise with known `ρ`:
/// `T (1 − ρ)² / σ²`.
pub fn fim_constant_ar1(t: usize, sigma: f64, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    if t == 0 || !(sigma > 0.0) {
        return Err(Error::InvalidArgument("need T >= 1 and sigma > 0".into()));
    }
    Ok(t as f64 * (1.0 - rho).powi(2) / (sigma * sigma))
}

/// `(1 + ρ) / (1 − ρ)`.
pub fn vir_ar1(rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok((1.0 + rho) / (1.0 - rho))
}

/// `1 + 2φ / (1 + φ²)`; `|φ| = 1` is admitted for the boundary maximum.
pub fn vir_ma1(phi: f64) -> Result<f64> {
    if !(phi.abs() <= 1.0) {
        return Err(Error::NonInvertible(format!("|phi| = {} exceeds 1", phi.abs())));
    }
    Ok(1.0 + 2.0 * phi / (1.0 + phi * phi))
}

/// `(1 + 2ρ/(1 − ρ)) · (1 + 2φ(1 − ρ)/(1 + φ² + 2φρ))`.
pub fn vir_arma11(rho: f64, phi: f64) -> Result<f64> {
    check_rho(rho)?;
    if !(phi.abs() <= 1.0) {
        return Err(Error::NonInvertible(format!("|phi| = {} exceeds 1", phi.abs())));
    }
    Ok((1.0 + 2.0 * rho / (1.0 - rho)) * (1.0 + 2.0 * phi * (1.0 - rho) / (1.0 + phi * phi + 2.0 * phi * rho)))
}

/// Constant-mean VIR under ARMA(p, q): `(Φ(1)² / Ψ(1)²) · σ² / γ₀`.
pub fn vir_arma_pq_constant(noise: &NoiseModel) -> Result<f64> {
    noise.check_invertible()?;
    let lp = noise.lag_polynomials();
    let psi1 = lp.psi_at(1.0);
    if psi1.abs() < 1e-12 {
        return Err(Error::NonStationary("unit root: Psi(1) = 0".into()));
    }
    let phi1 = lp.phi_at(1.0);
    let gamma0 = process_variance(noise)?;
    Ok(phi1 * phi1 / (psi1 * psi1) * noise.sigma() * noise.sigma() / gamma0)
}

/// Single-parameter VIR from a sensitivity profile indexed `t = 0..T`:
/// `(1 − ρ²) Σ s(t)² / Σ (s(t) − ρ s(t−1))²`, sums over `t = 1..T`.
pub fn vir_nonlinear_single(sens: &[f64], rho: f64) -> Result<f64> {
    check_rho(rho)?;
    if sens.len() < 2 {
        return Err(Error::InvalidArgument("sensitivity profile needs index 0 and at least one more point".into()));
    }
    let num: f64 = sens[1..].iter().map(|s| s * s).sum();
    let den: f64 = sens.windows(2).map(|w| (w[1] - rho * w[0]).powi(2)).sum();
    if !(den > 0.0) || !(num > 0.0) {
        return Err(Error::Unidentifiable { reason: "sensitivity profile is identically zero".into(), direction: vec![] });
    }
    Ok((1.0 - rho * rho) * num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_ar1_information() {
        assert_relative_eq!(fim_constant_ar1(40, 2.0, 0.0).unwrap(), 10.0);
        assert_relative_eq!(fim_constant_ar1(100, 1.0, 0.5).unwrap(), 25.0);
        // reciprocal is the asymptotic MLE variance σ²/(T(1−ρ)²)
        let (t, s, r) = (250usize, 0.3, 0.7);
        assert_relative_eq!(1.0 / fim_constant_ar1(t, s, r).unwrap(), s * s / (t as f64 * (1.0 - r) * (1.0 - r)), max_relative = 1e-14);
        assert!(fim_constant_ar1(0, 1.0, 0.1).is_err());
        assert!(fim_constant_ar1(10, 1.0, 1.0).is_err());
    }

    #[test]
    fn ar1_values() {
        assert_eq!(vir_ar1(0.0).unwrap(), 1.0);
        assert_relative_eq!(vir_ar1(0.5).unwrap(), 3.0);
        assert_relative_eq!(vir_ar1(-0.5).unwrap(), 1.0 / 3.0, max_relative = 1e-15);
        assert!(vir_ar1(1.0).is_err());
    }

    #[test]
    fn ma1_values() {
        assert_eq!(vir_ma1(0.0).unwrap(), 1.0);
        assert_eq!(vir_ma1(1.0).unwrap(), 2.0);
        assert_relative_eq!(vir_ma1(0.5).unwrap(), 1.8, max_relative = 1e-15);
        assert!(vir_ma1(1.01).is_err());
    }

    #[test]
    fn arma11_values_and_reductions() {
        assert_relative_eq!(vir_arma11(0.5, 0.5).unwrap(), 27.0 / 7.0, max_relative = 1e-14);
        for c in [-0.6, 0.1, 0.5, 0.9] {
            assert_relative_eq!(vir_arma11(c, 0.0).unwrap(), vir_ar1(c).unwrap(), epsilon = 1e-12);
            assert_relative_eq!(vir_arma11(0.0, c).unwrap(), vir_ma1(c).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn lag_polynomial_form_reduces() {
        for rho in [-0.7, 0.2, 0.8] {
            let m = NoiseModel::ar1(1.3, rho).unwrap();
            assert_relative_eq!(vir_arma_pq_constant(&m).unwrap(), vir_ar1(rho).unwrap(), epsilon = 1e-12);
            for phi in [-0.5, 0.3, 0.9] {
                let m = NoiseModel::arma(0.4, vec![rho], vec![phi]).unwrap();
                assert_relative_eq!(vir_arma_pq_constant(&m).unwrap(), vir_arma11(rho, phi).unwrap(), epsilon = 1e-12);
            }
        }
        let m = NoiseModel::ma1(1.0, 0.5).unwrap();
        assert_relative_eq!(vir_arma_pq_constant(&m).unwrap(), 1.8, epsilon = 1e-12);
    }

    #[test]
    fn monotone_and_ordered() {
        let grid: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
        for w in grid.windows(2) {
            assert!(vir_ar1(w[1]).unwrap() > vir_ar1(w[0]).unwrap());
            assert!(vir_ma1(w[1]).unwrap() > vir_ma1(w[0]).unwrap());
        }
        for &c in &grid {
            assert!(vir_ar1(c).unwrap() > vir_ma1(c).unwrap());
            for &phi in &grid {
                assert!(vir_arma11(c, phi).unwrap() >= vir_ar1(c).unwrap());
            }
        }
    }

    #[test]
    fn nonlinear_single_reductions() {
        let ones = vec![1.0; 1001];
        let v = vir_nonlinear_single(&ones, 0.6).unwrap();
        // finite-T constant profile: (1−ρ²)T / ((1−ρ)²T) = vir_ar1
        assert_relative_eq!(v, vir_ar1(0.6).unwrap(), max_relative = 1e-12);
        let wiggly: Vec<f64> = (0..50).map(|t| (t as f64 * 0.3).sin() + 0.1 * t as f64).collect();
        assert_relative_eq!(vir_nonlinear_single(&wiggly, 0.0).unwrap(), 1.0, epsilon = 1e-14);
        assert!(vir_nonlinear_single(&[0.0; 10], 0.5).is_err());
    }
}
