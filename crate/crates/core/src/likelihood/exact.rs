use super::{LogLikelihood, LN_2PI};
use crate::noise::autocovariances;
use crate::{Error, NoiseModel, Result};
use nalgebra::{DMatrix, DVector};

/// Largest series the dense evaluator accepts.
pub const EXACT_MAX_LEN: usize = 2000;

/// Joint Gaussian density of the residuals with covariance
/// `Σᵢⱼ = γ(|i − j|)`, evaluated through a Cholesky factorization.
pub fn exact_mvn(eps: &[f64], noise: &NoiseModel) -> Result<LogLikelihood> {
    let n = eps.len();
    if n == 0 || n > EXACT_MAX_LEN {
        return Err(Error::InvalidArgument(format!("dense likelihood needs 1..={EXACT_MAX_LEN} points, got {n}")));
    }
    let gamma = autocovariances(noise, n - 1)?;
    let sigma = DMatrix::from_fn(n, n, |i, j| gamma[i.abs_diff(j)]);
    let chol = sigma
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("autocovariance matrix".into()))?;
    let logdet: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let z = chol.l().solve_lower_triangular(&DVector::from_column_slice(eps)).expect("non-singular factor");
    let value = -0.5 * (n as f64 * LN_2PI + logdet + z.norm_squared());
    Ok(LogLikelihood { value, per_step: None, conditioned_steps: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::iid;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_case_is_iid() {
        let eps = [0.3, -1.2, 0.8, 2.1, -0.4];
        let a = exact_mvn(&eps, &NoiseModel::iid(1.7).unwrap()).unwrap().value;
        assert_relative_eq!(a, iid(&eps, 1.7, false).unwrap().value, epsilon = 1e-12);
    }

    #[test]
    fn ar1_three_point_hand_case() {
        let (s, rho) = (1.2f64, 0.6f64);
        let e = [0.4, -0.3, 1.1];
        let v = s * s / (1.0 - rho * rho);
        let m = nalgebra::Matrix3::new(1.0, rho, rho * rho, rho, 1.0, rho, rho * rho, rho, 1.0) * v;
        let x = nalgebra::Vector3::from_column_slice(&e);
        let quad = (x.transpose() * m.try_inverse().unwrap() * x)[0];
        let expect = -0.5 * (3.0 * LN_2PI + m.determinant().ln() + quad);
        let got = exact_mvn(&e, &NoiseModel::ar1(s, rho).unwrap()).unwrap().value;
        assert_relative_eq!(got, expect, epsilon = 1e-12);
    }

    #[test]
    fn size_limits() {
        assert!(exact_mvn(&[], &NoiseModel::iid(1.0).unwrap()).is_err());
        assert!(exact_mvn(&vec![0.0; EXACT_MAX_LEN + 1], &NoiseModel::iid(1.0).unwrap()).is_err());
    }
}
