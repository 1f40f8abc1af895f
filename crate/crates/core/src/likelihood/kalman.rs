use super::{LogLikelihood, LN_2PI};
use crate::{Error, NoiseModel, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Initial covariance scale for the diffuse start.
pub const DIFFUSE_KAPPA: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KalmanInit {
    /// `a(1) = 0`, `P(1)` the stationary covariance of the state.
    #[default]
    Stationary,
    /// `a(1) = 0`, `P(1) = κ I`.
    Diffuse,
}

/// `α(t+1) = T α(t) + R ν(t+1)`, `ε(t) = Z α(t)`, `ν ~ N(0, σ²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceForm {
    pub transition: DMatrix<f64>,
    pub loading: DVector<f64>,
    pub observation: DVector<f64>,
    pub sigma: f64,
    pub a1: DVector<f64>,
    pub p1: DMatrix<f64>,
}

impl StateSpaceForm {
    /// Checks dimensions and that `P(1)` is symmetric positive semidefinite.
    pub fn new(
        transition: DMatrix<f64>,
        loading: DVector<f64>,
        observation: DVector<f64>,
        sigma: f64,
        a1: DVector<f64>,
        p1: DMatrix<f64>,
    ) -> Result<Self> {
        let r = transition.nrows();
        if transition.ncols() != r || loading.len() != r || observation.len() != r || a1.len() != r || p1.shape() != (r, r)
        {
            return Err(Error::InvalidArgument("inconsistent state-space dimensions".into()));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        let scale = p1.amax().max(1.0);
        if (&p1 - p1.transpose()).amax() > 1e-10 * scale {
            return Err(Error::InvalidArgument("P(1) is not symmetric".into()));
        }
        let min_eig = p1.clone().symmetric_eigenvalues().min();
        if min_eig < -1e-9 * scale {
            return Err(Error::NotPositiveDefinite(format!("P(1) has eigenvalue {min_eig}")));
        }
        Ok(Self { transition, loading, observation, sigma, a1, p1 })
    }

    /// Harvey's form of an ARMA(p, q) process with state dimension
    /// `max(p, q + 1)`: `T` carries the AR coefficients down its first column
    /// and ones on the superdiagonal, `R = (1, φ₁, …)`, `Z = e₁`.
    pub fn arma(noise: &NoiseModel, init: KalmanInit) -> Result<Self> {
        Self::arma_coefficients(noise.sigma(), noise.rho(), noise.phi(), init)
    }

    pub(crate) fn arma_coefficients(sigma: f64, rho: &[f64], phi: &[f64], init: KalmanInit) -> Result<Self> {
        let r = rho.len().max(phi.len() + 1);
        let mut t = DMatrix::zeros(r, r);
        for (i, &c) in rho.iter().enumerate() {
            t[(i, 0)] = c;
        }
        for i in 0..r - 1 {
            t[(i, i + 1)] = 1.0;
        }
        let mut rv = DVector::zeros(r);
        rv[0] = 1.0;
        for (i, &c) in phi.iter().enumerate() {
            rv[i + 1] = c;
        }
        let mut z = DVector::zeros(r);
        z[0] = 1.0;
        let p1 = match init {
            KalmanInit::Stationary => stationary_covariance(&t, &rv, sigma)?,
            KalmanInit::Diffuse => DMatrix::identity(r, r) * DIFFUSE_KAPPA,
        };
        Self::new(t, rv, z, sigma, DVector::zeros(r), p1)
    }

    pub fn state_dim(&self) -> usize {
        self.transition.nrows()
    }
}

/// Solves `P = T P T' + σ² R R'` through `(I − T⊗T) vec P = σ² vec(R R')`.
fn stationary_covariance(t: &DMatrix<f64>, rv: &DVector<f64>, sigma: f64) -> Result<DMatrix<f64>> {
    let r = t.nrows();
    let a = DMatrix::identity(r * r, r * r) - t.kronecker(t);
    let q = rv * rv.transpose() * (sigma * sigma);
    let b = DVector::from_column_slice(q.as_slice());
    let sol = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::NonStationary("stationary state covariance does not exist".into()))?;
    let p = DMatrix::from_column_slice(r, r, sol.as_slice());
    Ok((&p + p.transpose()) * 0.5)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanOutput {
    pub loglik: LogLikelihood,
    /// One-step prediction errors `v(t)`.
    pub innovations: Vec<f64>,
    /// Prediction-error variances `F(t)`.
    pub variances: Vec<f64>,
}

impl KalmanOutput {
    /// `v(t) / √F(t)`, IID standard normal under a correct model.
    pub fn standardized(&self) -> Vec<f64> {
        self.innovations.iter().zip(&self.variances).map(|(v, f)| v / f.sqrt()).collect()
    }
}

/// Runs the prediction / update recursions over the residual series.
pub fn kalman(eps: &[f64], ssf: &StateSpaceForm, keep_steps: bool) -> Result<KalmanOutput> {
    let (v, f) = filter(eps, ssf)?;
    let steps: Vec<f64> = v.iter().zip(&f).map(|(v, f)| -0.5 * (LN_2PI + f.ln() + v * v / f)).collect();
    Ok(KalmanOutput { loglik: LogLikelihood::from_steps(steps, 0, keep_steps), innovations: v, variances: f })
}

/// Gaussian ARMA log-likelihood with `σ` profiled out; returns
/// `(max log-likelihood, σ̂)`.
pub fn kalman_concentrated(eps: &[f64], rho: &[f64], phi: &[f64]) -> Result<(f64, f64)> {
    let ssf = StateSpaceForm::arma_coefficients(1.0, rho, phi, KalmanInit::Stationary)?;
    let (v, f) = filter(eps, &ssf)?;
    let n = eps.len() as f64;
    let s2 = v.iter().zip(&f).map(|(v, f)| v * v / f).sum::<f64>() / n;
    if !(s2 > 0.0) {
        return Err(Error::Degenerate("zero innovation variance".into()));
    }
    let logdet: f64 = f.iter().map(|f| f.ln()).sum();
    Ok((-0.5 * n * (LN_2PI + 1.0 + s2.ln()) - 0.5 * logdet, s2.sqrt()))
}

fn filter(eps: &[f64], ssf: &StateSpaceForm) -> Result<(Vec<f64>, Vec<f64>)> {
    let r = ssf.state_dim();
    let t = ssf.transition.transpose(); // row-major view of T
    let t = t.as_slice();
    let z = ssf.observation.as_slice();
    let s2 = ssf.sigma * ssf.sigma;
    let q: Vec<f64> = (0..r * r).map(|k| s2 * ssf.loading[k / r] * ssf.loading[k % r]).collect();
    let mut a = ssf.a1.as_slice().to_vec();
    let mut p: Vec<f64> = ssf.p1.transpose().as_slice().to_vec();
    let mut pz = vec![0.0; r];
    let mut tmp = vec![0.0; r * r];
    let mut a_new = vec![0.0; r];
    let mut vs = Vec::with_capacity(eps.len());
    let mut fs = Vec::with_capacity(eps.len());
    for (step, &y) in eps.iter().enumerate() {
        let pred: f64 = (0..r).map(|i| z[i] * a[i]).sum();
        let v = y - pred;
        for i in 0..r {
            pz[i] = (0..r).map(|j| p[i * r + j] * z[j]).sum();
        }
        let f: f64 = (0..r).map(|i| z[i] * pz[i]).sum();
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::Degenerate(format!("prediction variance {f} at step {}", step + 1)));
        }
        vs.push(v);
        fs.push(f);
        // update
        for i in 0..r {
            a[i] += pz[i] * v / f;
        }
        for i in 0..r {
            for j in 0..r {
                p[i * r + j] -= pz[i] * pz[j] / f;
            }
        }
        // predict: a ← T a, P ← T P T' + σ² R R'
        for i in 0..r {
            a_new[i] = (0..r).map(|k| t[i * r + k] * a[k]).sum();
        }
        a.copy_from_slice(&a_new);
        for i in 0..r {
            for j in 0..r {
                tmp[i * r + j] = (0..r).map(|k| t[i * r + k] * p[k * r + j]).sum();
            }
        }
        for i in 0..r {
            for j in 0..r {
                p[i * r + j] = q[i * r + j] + (0..r).map(|k| tmp[i * r + k] * t[j * r + k]).sum::<f64>();
            }
        }
    }
    Ok((vs, fs))
}
