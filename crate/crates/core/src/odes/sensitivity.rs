use super::{check_grid, fd_step, predict, DynamicalModel, Sensitivities, Tolerances, Trajectory};
use crate::{Result, TimeSeries};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensitivityMethod {
    /// Central differences with step `1e-6 · max(1, |θᵢ|)`.
    FiniteDifference,
    /// Integrates `dS/dt = J_x S + J_θ` alongside the state.
    ForwardOde,
}

/// Trajectory together with `∂f/∂θ` on every grid point.
pub fn sensitivities(
    model: &dyn DynamicalModel,
    params: &[f64],
    grid: &TimeSeries,
    method: SensitivityMethod,
    tol: &Tolerances,
) -> Result<Trajectory> {
    model.check_params(params)?;
    check_grid(model, grid)?;
    let (values, matrix) = match method {
        SensitivityMethod::FiniteDifference => finite_difference(model, params, grid, tol)?,
        SensitivityMethod::ForwardOde => forward(model, params, grid, tol)?,
    };
    Ok(Trajectory {
        grid: grid.with_values(values)?,
        sensitivities: Some(Sensitivities { names: model.param_names(), matrix }),
    })
}

fn finite_difference(
    model: &dyn DynamicalModel,
    params: &[f64],
    grid: &TimeSeries,
    tol: &Tolerances,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    // the difference quotient amplifies solver error by 1/step
    let tol = &tol.scaled(1e-3);
    let values = predict(model, params, grid, tol)?;
    let m = params.len();
    let mut s = DMatrix::zeros(grid.len(), m);
    let mut p = params.to_vec();
    for j in 0..m {
        let h = fd_step(params[j]);
        p[j] = params[j] + h;
        let up = predict(model, &p, grid, tol)?;
        p[j] = params[j] - h;
        let dn = predict(model, &p, grid, tol)?;
        p[j] = params[j];
        for i in 0..grid.len() {
            s[(i, j)] = (up[i] - dn[i]) / (2.0 * h);
        }
    }
    Ok((values, s))
}

fn forward(
    model: &dyn DynamicalModel,
    params: &[f64],
    grid: &TimeSeries,
    tol: &Tolerances,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = model.state_dim();
    let m = params.len();
    // columns are integrated as S_j · c_j so the error control sees
    // comparable magnitudes for small and large parameters
    let c: Vec<f64> = params.iter().map(|p| p.abs().max(1.0)).collect();
    let mut y0 = model.initial_state(params);
    let mut s0 = vec![0.0; n * m];
    model.initial_state_jacobian(params, &mut s0);
    for (k, v) in s0.iter_mut().enumerate() {
        *v *= c[k % m];
    }
    y0.extend_from_slice(&s0);

    let mut jx = vec![0.0; n * n];
    let mut jp = vec![0.0; n * m];
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let (x, s) = y.split_at(n);
        let (dx, ds) = dy.split_at_mut(n);
        model.rhs(t, x, params, dx);
        model.jacobian_state(t, x, params, &mut jx);
        model.jacobian_params(t, x, params, &mut jp);
        for i in 0..n {
            for j in 0..m {
                let mut acc = jp[i * m + j] * c[j];
                for k in 0..n {
                    acc += jx[i * n + k] * s[k * m + j];
                }
                ds[i * m + j] = acc;
            }
        }
    };
    let times = grid.times();
    let t0 = model.initial_time().unwrap_or(times[0]);
    let states = super::dopri5::solve(rhs, t0, &y0, &times, &model.breakpoints(), tol)?;

    let width = n + n * m;
    let mut values = Vec::with_capacity(times.len());
    let mut sens = DMatrix::zeros(times.len(), m);
    let (mut gx, mut gp) = (vec![0.0; n], vec![0.0; m]);
    for (i, &t) in times.iter().enumerate() {
        let row = &states[i * width..(i + 1) * width];
        let (x, s) = row.split_at(n);
        values.push(model.observable(t, x, params));
        model.observable_gradients(t, x, params, &mut gx, &mut gp);
        for j in 0..m {
            let mut acc = gp[j];
            for k in 0..n {
                acc += gx[k] * s[k * m + j];
            }
            sens[(i, j)] = acc;
        }
        for j in 0..m {
            sens[(i, j)] = gp[j] + (sens[(i, j)] - gp[j]) / c[j];
        }
    }
    Ok((values, sens))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odes::herg::REFERENCE_PARAMS;
    use crate::odes::{logistic_analytic_gradient, ConstantModel, HergModel, LogisticModel, VoltageProtocol};

    fn assert_agree(a: &DMatrix<f64>, b: &DMatrix<f64>, rel: f64) {
        for j in 0..a.ncols() {
            let scale = a.column(j).amax().max(b.column(j).amax());
            for i in 0..a.nrows() {
                let (u, v) = (a[(i, j)], b[(i, j)]);
                if u.abs().max(v.abs()) > 1e-8 {
                    assert!((u - v).abs() <= rel * scale.max(1e-300), "row {i} col {j}: {u} vs {v}");
                }
            }
        }
    }

    #[test]
    fn constant_model_unit_sensitivity() {
        let grid = TimeSeries::grid(3.0, 10.0, 8).unwrap();
        for method in [SensitivityMethod::FiniteDifference, SensitivityMethod::ForwardOde] {
            let tr = sensitivities(&ConstantModel, &[4.2], &grid, method, &Tolerances::default()).unwrap();
            assert!(tr.values().iter().all(|&v| v == 4.2));
            for v in tr.sensitivity("mu").unwrap() {
                assert!((v - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn logistic_methods_agree_with_each_other_and_closed_form() {
        let p = [0.5, 50.0, 1.0];
        let grid = TimeSeries::grid(0.0, 20.0, 201).unwrap();
        let tol = Tolerances::default();
        let fd = sensitivities(&LogisticModel, &p, &grid, SensitivityMethod::FiniteDifference, &tol).unwrap();
        let fw = sensitivities(&LogisticModel, &p, &grid, SensitivityMethod::ForwardOde, &tol).unwrap();
        let (a, b) = (&fd.sensitivities.as_ref().unwrap().matrix, &fw.sensitivities.as_ref().unwrap().matrix);
        assert_agree(a, b, 1e-4);
        let exact = DMatrix::from_fn(grid.len(), 3, |i, j| logistic_analytic_gradient(&p, grid.time(i))[j]);
        assert_agree(b, &exact, 1e-6);
        // f → κ so ∂f/∂κ → 1
        let late = TimeSeries::new(60.0, 1.0, vec![0.0]).unwrap();
        let fw_late = sensitivities(&LogisticModel, &p, &late, SensitivityMethod::ForwardOde, &tol).unwrap();
        assert!((fw_late.sensitivity("kappa").unwrap()[0] - 1.0).abs() < 1e-6);
        // ∂f/∂r at t = 5
        let d5 = logistic_analytic_gradient(&p, 5.0)[0];
        assert!((a[(50, 0)] - d5).abs() < 1e-4 * d5);
        assert!((b[(50, 0)] - d5).abs() < 1e-4 * d5);
    }

    #[test]
    fn herg_methods_agree() {
        let m = HergModel::new(VoltageProtocol::synthetic_staircase());
        let grid = TimeSeries::grid(0.0, 6.5, 651).unwrap();
        let tol = Tolerances::default();
        let fd = sensitivities(&m, &REFERENCE_PARAMS, &grid, SensitivityMethod::FiniteDifference, &tol).unwrap();
        let fw = sensitivities(&m, &REFERENCE_PARAMS, &grid, SensitivityMethod::ForwardOde, &tol).unwrap();
        let scale = fd.values().iter().fold(0.0f64, |s, v| s.max(v.abs()));
        for (u, v) in fd.values().iter().zip(fw.values()) {
            assert!((u - v).abs() < 1e-6 * scale);
        }
        assert_agree(
            &fd.sensitivities.as_ref().unwrap().matrix,
            &fw.sensitivities.as_ref().unwrap().matrix,
            1e-4,
        );
    }
}
