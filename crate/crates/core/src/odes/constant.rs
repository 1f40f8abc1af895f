use super::DynamicalModel;

/// `f(t; μ) = μ`, written as the trivial ODE `dx/dt = 0`, `x(0) = μ`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantModel;

impl DynamicalModel for ConstantModel {
    fn name(&self) -> &str {
        "constant"
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn param_names(&self) -> Vec<String> {
        vec!["mu".into()]
    }

    fn initial_time(&self) -> Option<f64> {
        None
    }

    fn initial_state(&self, params: &[f64]) -> Vec<f64> {
        vec![params[0]]
    }

    fn rhs(&self, _t: f64, _x: &[f64], _params: &[f64], dx: &mut [f64]) {
        dx[0] = 0.0;
    }

    fn closed_form(&self, params: &[f64], times: &[f64]) -> Option<crate::Result<Vec<f64>>> {
        Some(Ok(vec![params[0]; times.len()]))
    }

    fn observable(&self, _t: f64, x: &[f64], _params: &[f64]) -> f64 {
        x[0]
    }

    fn initial_state_jacobian(&self, _params: &[f64], out: &mut [f64]) {
        out[0] = 1.0;
    }

    fn jacobian_state(&self, _t: f64, _x: &[f64], _params: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
    }

    fn jacobian_params(&self, _t: f64, _x: &[f64], _params: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
    }

    fn observable_gradients(&self, _t: f64, _x: &[f64], _params: &[f64], dx: &mut [f64], dp: &mut [f64]) {
        dx[0] = 1.0;
        dp[0] = 0.0;
    }
}
