use super::{noise_loglik, residuals, Engine};
use crate::odes::{predict_with, DynamicalModel, Solver, Tolerances, Trajectory};
use crate::{Error, NoiseKind, NoiseModel, Result, TimeSeries};
use std::fmt;
use std::sync::Arc;

/// Noise family with optionally fixed coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub p: usize,
    pub q: usize,
    pub fixed_sigma: Option<f64>,
    pub fixed_rho: Option<Vec<f64>>,
    pub fixed_phi: Option<Vec<f64>>,
}

impl NoiseSpec {
    pub fn iid() -> Self {
        Self::orders(0, 0)
    }

    pub fn ar1() -> Self {
        Self::orders(1, 0)
    }

    pub fn ma1() -> Self {
        Self::orders(0, 1)
    }

    pub fn arma11() -> Self {
        Self::orders(1, 1)
    }

    /// ARMA(p, q) family; tags as IID, AR(1) or MA(1) where they apply.
    pub fn orders(p: usize, q: usize) -> Self {
        let kind = match (p, q) {
            (0, 0) => NoiseKind::Iid,
            (1, 0) => NoiseKind::Ar1,
            (0, 1) => NoiseKind::Ma1,
            _ => NoiseKind::Arma,
        };
        Self { kind, p, q, fixed_sigma: None, fixed_rho: None, fixed_phi: None }
    }

    pub fn with_fixed_rho(mut self, rho: Vec<f64>) -> Self {
        self.fixed_rho = Some(rho);
        self
    }

    pub fn with_fixed_phi(mut self, phi: Vec<f64>) -> Self {
        self.fixed_phi = Some(phi);
        self
    }

    pub fn with_fixed_sigma(mut self, sigma: f64) -> Self {
        self.fixed_sigma = Some(sigma);
        self
    }

    fn coefficient_names(prefix: &str, n: usize) -> Vec<String> {
        if n == 1 {
            vec![prefix.to_string()]
        } else {
            (1..=n).map(|i| format!("{prefix}{i}")).collect()
        }
    }

    /// Names of the free noise parameters, in layout order.
    pub fn free_names(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.fixed_sigma.is_none() {
            v.push("sigma".to_string());
        }
        if self.fixed_rho.is_none() {
            v.extend(Self::coefficient_names("rho", self.p));
        }
        if self.fixed_phi.is_none() {
            v.extend(Self::coefficient_names("phi", self.q));
        }
        v
    }

    /// Builds the noise model from the free values in layout order.
    pub fn build(&self, free: &[f64]) -> Result<NoiseModel> {
        let mut it = free.iter().copied();
        let mut take = |n: usize| -> Result<Vec<f64>> {
            let v: Vec<f64> = it.by_ref().take(n).collect();
            if v.len() != n {
                return Err(Error::InvalidArgument("too few noise parameters".into()));
            }
            Ok(v)
        };
        let sigma = match self.fixed_sigma {
            Some(s) => s,
            None => take(1)?[0],
        };
        let rho = match &self.fixed_rho {
            Some(r) => r.clone(),
            None => take(self.p)?,
        };
        let phi = match &self.fixed_phi {
            Some(f) => f.clone(),
            None => take(self.q)?,
        };
        if rho.len() != self.p || phi.len() != self.q {
            return Err(Error::InvalidNoise("fixed coefficients do not match the orders".into()));
        }
        NoiseModel::new(self.kind, sigma, rho, phi)
    }

    pub fn label(&self) -> String {
        match self.kind {
            NoiseKind::Iid => "iid".into(),
            NoiseKind::Ar1 => "ar1".into(),
            NoiseKind::Ma1 => "ma1".into(),
            NoiseKind::Arma => format!("arma({},{})", self.p, self.q),
        }
    }
}

/// `x(t) = f(t; θ) + ε(t)`: dynamics, noise family and likelihood engine.
#[derive(Clone)]
pub struct ObservationModel {
    pub dynamics: Arc<dyn DynamicalModel>,
    pub noise: NoiseSpec,
    pub engine: Engine,
    pub tolerances: Tolerances,
    pub solver: Solver,
}

impl fmt::Debug for ObservationModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObservationModel")
            .field("dynamics", &self.dynamics.name())
            .field("noise", &self.noise)
            .field("engine", &self.engine)
            .field("solver", &self.solver)
            .finish()
    }
}

impl ObservationModel {
    pub fn new(dynamics: Arc<dyn DynamicalModel>, noise: NoiseSpec) -> Self {
        Self { dynamics, noise, engine: Engine::default(), tolerances: Tolerances::default(), solver: Solver::default() }
    }

    pub fn with_engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }

    pub fn with_solver(mut self, solver: Solver) -> Self {
        self.solver = solver;
        self
    }

    /// Free parameters: dynamics parameters, then σ, ρ…, φ… unless fixed.
    pub fn param_names(&self) -> Vec<String> {
        let mut v = self.dynamics.param_names();
        v.extend(self.noise.free_names());
        v
    }

    pub fn dim(&self) -> usize {
        self.dynamics.param_dim() + self.noise.free_names().len()
    }

    pub fn describe(&self) -> String {
        format!("{} + {}", self.dynamics.name(), self.noise.label())
    }

    pub fn split<'a>(&self, theta: &'a [f64]) -> Result<(&'a [f64], NoiseModel)> {
        let m = self.dynamics.param_dim();
        if theta.len() != self.dim() {
            return Err(Error::InvalidArgument(format!("expected {} parameters, got {}", self.dim(), theta.len())));
        }
        let (dynp, rest) = theta.split_at(m);
        Ok((dynp, self.noise.build(rest)?))
    }

    pub fn predict(&self, grid: &TimeSeries, theta: &[f64]) -> Result<Vec<f64>> {
        let (dynp, _) = self.split(theta)?;
        predict_with(self.dynamics.as_ref(), dynp, grid, &self.tolerances, self.solver)
    }

    pub fn residuals(&self, data: &TimeSeries, theta: &[f64]) -> Result<Vec<f64>> {
        let f = self.predict(data, theta)?;
        let traj = Trajectory { grid: data.with_values(f)?, sensitivities: None };
        residuals(data, &traj)
    }

    pub fn loglik(&self, data: &TimeSeries, theta: &[f64]) -> Result<f64> {
        let (_, noise) = self.split(theta)?;
        let eps = self.residuals(data, theta)?;
        Ok(noise_loglik(&eps, &noise, self.engine)?.value)
    }

    /// Simulated observations at `theta` with the given innovation seed.
    pub fn simulate(&self, grid: &TimeSeries, theta: &[f64], seed: u64) -> Result<TimeSeries> {
        let (_, noise) = self.split(theta)?;
        let f = self.predict(grid, theta)?;
        let eps = crate::noise::simulate_noise(&noise, grid.len(), seed, crate::noise::DEFAULT_BURN_IN)?;
        grid.with_values(f.iter().zip(eps.values()).map(|(a, b)| a + b).collect())
    }
}
