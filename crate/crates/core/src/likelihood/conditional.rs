use super::{LogLikelihood, LN_2PI};
use crate::{Error, Result};

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(v.abs() < 1.0) {
        let msg = format!("|{name}| = {} must be below 1", v.abs());
        return Err(if name == "rho" { Error::NonStationary(msg) } else { Error::NonInvertible(msg) });
    }
    Ok(())
}

fn gaussian_steps(nu: impl Iterator<Item = f64>, sigma: f64) -> Vec<f64> {
    let c = -0.5 * LN_2PI - sigma.ln();
    let inv = 0.5 / (sigma * sigma);
    nu.map(|v| c - inv * v * v).collect()
}

/// Independent Gaussian residuals.
pub fn iid(eps: &[f64], sigma: f64, keep_steps: bool) -> Result<LogLikelihood> {
    check_sigma(sigma)?;
    Ok(LogLikelihood::from_steps(gaussian_steps(eps.iter().copied(), sigma), 0, keep_steps))
}

/// `ν(t) = ε(t) − ρ ε(t−1)` for `t = 1..T`, conditioning on `ε(0)`.
pub fn ar1_conditional(eps: &[f64], sigma: f64, rho: f64, keep_steps: bool) -> Result<LogLikelihood> {
    check_sigma(sigma)?;
    check_unit("rho", rho)?;
    if eps.len() < 2 {
        return Err(Error::InvalidSeries("AR(1) conditional likelihood needs at least 2 points".into()));
    }
    let nu = eps.windows(2).map(|w| w[1] - rho * w[0]);
    Ok(LogLikelihood::from_steps(gaussian_steps(nu, sigma), 1, keep_steps))
}

/// `ν(t) = ε(t) − ρ ε(t−1) − φ ν(t−1)` for `t ≥ 3` with `ν(1) = ν(2) = 0`
/// (1-based), normalized by the `T − 2` summed terms.
pub fn arma11_conditional(eps: &[f64], sigma: f64, rho: f64, phi: f64, keep_steps: bool) -> Result<LogLikelihood> {
    check_sigma(sigma)?;
    check_unit("rho", rho)?;
    check_unit("phi", phi)?;
    if eps.len() < 3 {
        return Err(Error::InvalidSeries("ARMA(1,1) conditional likelihood needs at least 3 points".into()));
    }
    let mut prev = 0.0;
    let nu = (2..eps.len()).map(|t| {
        let v = eps[t] - rho * eps[t - 1] - phi * prev;
        prev = v;
        v
    });
    let steps = gaussian_steps(nu, sigma);
    Ok(LogLikelihood::from_steps(steps, 2, keep_steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const FIX: [f64; 8] = [0.3, -1.2, 0.8, 2.1, -0.4, 0.05, 1.7, -0.9];

    #[test]
    fn iid_hand_cases() {
        let l = iid(&[0.0; 7], 1.0, true).unwrap();
        assert_relative_eq!(l.value, -3.5 * LN_2PI, epsilon = 1e-12);
        let l = iid(&[1.0], 1.0, false).unwrap();
        assert_relative_eq!(l.value, -0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5, epsilon = 1e-14);
        assert!(l.per_step.is_none());
        assert!(iid(&[1.0], 0.0, false).is_err());
    }

    #[test]
    fn ar1_hand_case() {
        let l = ar1_conditional(&[1.0, 2.0, 3.0], 1.0, 0.5, true).unwrap();
        let expect = -(2.0 * std::f64::consts::PI).ln() - 0.5 * (1.5f64.powi(2) + 2.0f64.powi(2));
        assert_relative_eq!(l.value, expect, epsilon = 1e-13);
        assert_eq!(l.conditioned_steps, 1);
        let steps = l.per_step.unwrap();
        assert_eq!(steps.len(), 2);
        assert_relative_eq!(steps.iter().sum::<f64>(), l.value, epsilon = 1e-15);
    }

    #[test]
    fn ar1_reduces_to_iid() {
        let a = ar1_conditional(&FIX, 0.7, 0.0, false).unwrap().value;
        let b = iid(&FIX[1..], 0.7, false).unwrap().value;
        assert_relative_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn reduction_lattice() {
        let s = 1.3;
        let a = arma11_conditional(&FIX, s, 0.4, 0.0, false).unwrap().value;
        assert_relative_eq!(a, ar1_conditional(&FIX[1..], s, 0.4, false).unwrap().value, epsilon = 1e-12);
        let b = arma11_conditional(&FIX, s, 0.0, 0.0, false).unwrap().value;
        assert_relative_eq!(b, iid(&FIX[2..], s, false).unwrap().value, epsilon = 1e-12);
        // MA(1) alone: ν(t) = ε(t) − φ ν(t−1)
        let phi = 0.35;
        let mut prev = 0.0;
        let mut quad = 0.0;
        for &e in &FIX[2..] {
            let v = e - phi * prev;
            quad += v * v;
            prev = v;
        }
        let n = (FIX.len() - 2) as f64;
        let expect = -0.5 * n * LN_2PI - n * s.ln() - quad / (2.0 * s * s);
        let c = arma11_conditional(&FIX, s, 0.0, phi, false).unwrap().value;
        assert_relative_eq!(c, expect, epsilon = 1e-12);
    }

    #[test]
    fn arma11_five_point_fixture() {
        // straight-line recursion, written out term by term
        let e = [0.5, -0.25, 1.0, 0.75, -1.5];
        let (rho, phi, s) = (0.4, 0.2, 0.8f64);
        let nu3 = e[2] - rho * e[1];
        let nu4 = e[3] - rho * e[2] - phi * nu3;
        let nu5 = e[4] - rho * e[3] - phi * nu4;
        let expect = -1.5 * (2.0 * std::f64::consts::PI).ln() - 1.5 * (s * s).ln()
            - (nu3 * nu3 + nu4 * nu4 + nu5 * nu5) / (2.0 * s * s);
        let l = arma11_conditional(&e, s, rho, phi, true).unwrap();
        assert_relative_eq!(l.value, expect, epsilon = 1e-13);
        assert_eq!(l.conditioned_steps, 2);
        assert_eq!(l.per_step.unwrap().len(), 3);
    }

    #[test]
    fn invalid_coefficients_rejected() {
        assert!(matches!(ar1_conditional(&FIX, 1.0, 1.0, false), Err(Error::NonStationary(_))));
        assert!(matches!(arma11_conditional(&FIX, 1.0, 0.1, -1.2, false), Err(Error::NonInvertible(_))));
        assert!(ar1_conditional(&[1.0], 1.0, 0.1, false).is_err());
        assert!(arma11_conditional(&[1.0, 2.0], 1.0, 0.1, 0.1, false).is_err());
    }
}
