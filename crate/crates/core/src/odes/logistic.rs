use super::{check_len_finite, DynamicalModel};
use crate::{Error, Result};

/// Logistic growth `dx/dt = r x (1 − x/κ)` observed directly.
/// Parameters are `[r, kappa, x0]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogisticModel;

impl LogisticModel {
    /// Validated parameter vector.
    pub fn params(r: f64, kappa: f64, x0: f64) -> Result<[f64; 3]> {
        let p = [r, kappa, x0];
        LogisticModel.check_params(&p)?;
        Ok(p)
    }
}

impl DynamicalModel for LogisticModel {
    fn name(&self) -> &str {
        "logistic"
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn param_names(&self) -> Vec<String> {
        vec!["r".into(), "kappa".into(), "x0".into()]
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        check_len_finite("logistic", params, 3)?;
        if params.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "logistic parameters must be positive, got {params:?}"
            )));
        }
        Ok(())
    }

    fn initial_state(&self, params: &[f64]) -> Vec<f64> {
        vec![params[2]]
    }

    fn rhs(&self, _t: f64, x: &[f64], p: &[f64], dx: &mut [f64]) {
        dx[0] = p[0] * x[0] * (1.0 - x[0] / p[1]);
    }

    fn closed_form(&self, params: &[f64], times: &[f64]) -> Option<crate::Result<Vec<f64>>> {
        Some(Ok(times.iter().map(|&t| logistic_analytic(params, t)).collect()))
    }

    fn observable(&self, _t: f64, x: &[f64], _p: &[f64]) -> f64 {
        x[0]
    }

    fn initial_state_jacobian(&self, _p: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&[0.0, 0.0, 1.0]);
    }

    fn jacobian_state(&self, _t: f64, x: &[f64], p: &[f64], out: &mut [f64]) {
        out[0] = p[0] * (1.0 - 2.0 * x[0] / p[1]);
    }

    fn jacobian_params(&self, _t: f64, x: &[f64], p: &[f64], out: &mut [f64]) {
        out[0] = x[0] * (1.0 - x[0] / p[1]);
        out[1] = p[0] * x[0] * x[0] / (p[1] * p[1]);
        out[2] = 0.0;
    }

    fn observable_gradients(&self, _t: f64, _x: &[f64], _p: &[f64], dx: &mut [f64], dp: &mut [f64]) {
        dx[0] = 1.0;
        dp.fill(0.0);
    }
}

/// Closed-form logistic solution `κ x₀ / (x₀ + (κ − x₀) e^{−rt})`.
pub fn logistic_analytic(params: &[f64], t: f64) -> f64 {
    let (r, k, x0) = (params[0], params[1], params[2]);
    k * x0 / (x0 + (k - x0) * (-r * t).exp())
}

/// Gradient of [`logistic_analytic`] with respect to `[r, kappa, x0]`.
pub fn logistic_analytic_gradient(params: &[f64], t: f64) -> [f64; 3] {
    let (r, k, x0) = (params[0], params[1], params[2]);
    let e = (-r * t).exp();
    let d = x0 + (k - x0) * e;
    let d2 = d * d;
    [k * x0 * (k - x0) * t * e / d2, x0 * x0 * (1.0 - e) / d2, k * k * e / d2]
}
