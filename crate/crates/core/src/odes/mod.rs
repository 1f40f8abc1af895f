//! ODE models, numerical integration and parameter sensitivities.

mod constant;
pub mod dopri5;
mod herg;
mod logistic;
mod protocol;
mod sensitivity;

pub use constant::ConstantModel;
pub use dopri5::Tolerances;
pub use herg::{herg_priors, HergModel, DEFAULT_E_K_MV, HERG_PARAM_NAMES, PREPACE_SECONDS, PREPACE_VOLTAGE_MV};
pub use logistic::{logistic_analytic, logistic_analytic_gradient, LogisticModel};
pub use protocol::{Segment, VoltageProtocol};
pub use sensitivity::{sensitivities, SensitivityMethod};

use crate::{Result, TimeSeries};
use nalgebra::DMatrix;

/// An ODE system `dx/dt = rhs(t, x; θ)` with a scalar observable `g(t, x; θ)`.
///
/// Matrices passed as `&mut [f64]` are row-major. The derivative methods
/// default to central differences; models override them with exact forms.
pub trait DynamicalModel: Send + Sync {
    fn name(&self) -> &str;

    fn state_dim(&self) -> usize;

    fn param_names(&self) -> Vec<String>;

    fn param_dim(&self) -> usize {
        self.param_names().len()
    }

    /// Rejects parameter vectors outside the model's domain.
    fn check_params(&self, params: &[f64]) -> Result<()> {
        check_len_finite(self.name(), params, self.param_dim())
    }

    /// Time at which `initial_state` holds; `None` means the first grid time.
    fn initial_time(&self) -> Option<f64> {
        Some(0.0)
    }

    fn initial_state(&self, params: &[f64]) -> Vec<f64>;

    fn rhs(&self, t: f64, x: &[f64], params: &[f64], dx: &mut [f64]);

    fn observable(&self, t: f64, x: &[f64], params: &[f64]) -> f64;

    /// Observable values in closed form, when the model has one for these
    /// parameters. Used by [`Solver::ClosedForm`].
    fn closed_form(&self, _params: &[f64], _times: &[f64]) -> Option<Result<Vec<f64>>> {
        None
    }

    /// Times where the right-hand side is discontinuous.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// `∂x₀/∂θ`, `n × m`.
    fn initial_state_jacobian(&self, params: &[f64], out: &mut [f64]) {
        let (n, m) = (self.state_dim(), params.len());
        let mut p = params.to_vec();
        for j in 0..m {
            let h = fd_step(params[j]);
            p[j] = params[j] + h;
            let up = self.initial_state(&p);
            p[j] = params[j] - h;
            let dn = self.initial_state(&p);
            p[j] = params[j];
            for i in 0..n {
                out[i * m + j] = (up[i] - dn[i]) / (2.0 * h);
            }
        }
    }

    /// `∂rhs/∂x`, `n × n`.
    fn jacobian_state(&self, t: f64, x: &[f64], params: &[f64], out: &mut [f64]) {
        let n = x.len();
        let mut xs = x.to_vec();
        let (mut up, mut dn) = (vec![0.0; n], vec![0.0; n]);
        for j in 0..n {
            let h = fd_step(x[j]);
            xs[j] = x[j] + h;
            self.rhs(t, &xs, params, &mut up);
            xs[j] = x[j] - h;
            self.rhs(t, &xs, params, &mut dn);
            xs[j] = x[j];
            for i in 0..n {
                out[i * n + j] = (up[i] - dn[i]) / (2.0 * h);
            }
        }
    }

    /// `∂rhs/∂θ`, `n × m`.
    fn jacobian_params(&self, t: f64, x: &[f64], params: &[f64], out: &mut [f64]) {
        let (n, m) = (x.len(), params.len());
        let mut p = params.to_vec();
        let (mut up, mut dn) = (vec![0.0; n], vec![0.0; n]);
        for j in 0..m {
            let h = fd_step(params[j]);
            p[j] = params[j] + h;
            self.rhs(t, x, &p, &mut up);
            p[j] = params[j] - h;
            self.rhs(t, x, &p, &mut dn);
            p[j] = params[j];
            for i in 0..n {
                out[i * m + j] = (up[i] - dn[i]) / (2.0 * h);
            }
        }
    }

    /// Gradients of the observable with respect to state (`dx`, length n)
    /// and parameters (`dp`, length m).
    fn observable_gradients(&self, t: f64, x: &[f64], params: &[f64], dx: &mut [f64], dp: &mut [f64]) {
        let mut xs = x.to_vec();
        for j in 0..x.len() {
            let h = fd_step(x[j]);
            xs[j] = x[j] + h;
            let up = self.observable(t, &xs, params);
            xs[j] = x[j] - h;
            let dn = self.observable(t, &xs, params);
            xs[j] = x[j];
            dx[j] = (up - dn) / (2.0 * h);
        }
        let mut p = params.to_vec();
        for j in 0..params.len() {
            let h = fd_step(params[j]);
            p[j] = params[j] + h;
            let up = self.observable(t, x, &p);
            p[j] = params[j] - h;
            let dn = self.observable(t, x, &p);
            p[j] = params[j];
            dp[j] = (up - dn) / (2.0 * h);
        }
    }
}

/// Central-difference step: `1e-6 · max(1, |v|)`.
pub fn fd_step(v: f64) -> f64 {
    1e-6 * v.abs().max(1.0)
}

pub(crate) fn check_len_finite(name: &str, params: &[f64], m: usize) -> Result<()> {
    if params.len() != m {
        return Err(crate::Error::InvalidArgument(format!(
            "{name} expects {m} parameters, got {}",
            params.len()
        )));
    }
    if let Some(v) = params.iter().find(|v| !v.is_finite()) {
        return Err(crate::Error::InvalidArgument(format!("{name}: non-finite parameter {v}")));
    }
    Ok(())
}

/// Observable on a grid, plus `∂f/∂θ` when requested.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeSeries,
    pub sensitivities: Option<Sensitivities>,
}

/// `∂f/∂θᵢ` with one row per grid point and one column per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Sensitivities {
    pub names: Vec<String>,
    pub matrix: DMatrix<f64>,
}

impl Trajectory {
    pub fn values(&self) -> &[f64] {
        self.grid.values()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Sensitivity column for parameter `name`.
    pub fn sensitivity(&self, name: &str) -> Option<Vec<f64>> {
        let s = self.sensitivities.as_ref()?;
        let j = s.names.iter().position(|n| n == name)?;
        Some(s.matrix.column(j).iter().copied().collect())
    }
}

fn check_grid(model: &dyn DynamicalModel, grid: &TimeSeries) -> Result<()> {
    match model.initial_time() {
        Some(t0) if grid.t0() < t0 => Err(crate::Error::InvalidArgument(format!(
            "grid starts at {} before the model's initial time {t0}",
            grid.t0()
        ))),
        _ => Ok(()),
    }
}

/// States at each grid time, row-major `len × n`.
pub(crate) fn solve_states(
    model: &dyn DynamicalModel,
    params: &[f64],
    times: &[f64],
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    let x0 = model.initial_state(params);
    dopri5::solve(
        |t, x, dx| model.rhs(t, x, params, dx),
        model.initial_time().unwrap_or(times.first().copied().unwrap_or(0.0)),
        &x0,
        times,
        &model.breakpoints(),
        tol,
    )
}

/// How predictions are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Always integrate numerically.
    #[default]
    Numerical,
    /// Use the model's closed form where it exists, else integrate.
    ClosedForm,
}

/// As [`predict`], optionally through the model's closed form.
pub fn predict_with(
    model: &dyn DynamicalModel,
    params: &[f64],
    grid: &TimeSeries,
    tol: &Tolerances,
    solver: Solver,
) -> Result<Vec<f64>> {
    if solver == Solver::ClosedForm {
        model.check_params(params)?;
        check_grid(model, grid)?;
        if let Some(v) = model.closed_form(params, &grid.times()) {
            return v;
        }
    }
    predict(model, params, grid, tol)
}

/// Observable values `f(t; θ)` at each time of `grid`.
pub fn predict(model: &dyn DynamicalModel, params: &[f64], grid: &TimeSeries, tol: &Tolerances) -> Result<Vec<f64>> {
    model.check_params(params)?;
    check_grid(model, grid)?;
    let times = grid.times();
    let n = model.state_dim();
    let states = solve_states(model, params, &times, tol)?;
    Ok(times
        .iter()
        .enumerate()
        .map(|(i, &t)| model.observable(t, &states[i * n..(i + 1) * n], params))
        .collect())
}

/// Integrates `model` at `params` and evaluates the observable on `grid`.
pub fn integrate(model: &dyn DynamicalModel, params: &[f64], grid: &TimeSeries, tol: &Tolerances) -> Result<Trajectory> {
    let values = predict(model, params, grid, tol)?;
    Ok(Trajectory { grid: grid.with_values(values)?, sensitivities: None })
}
