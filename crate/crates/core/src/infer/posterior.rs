use super::{Prior, Transform};
use crate::likelihood::ObservationModel;
use crate::{Error, Result, TimeSeries};
use serde::{Deserialize, Serialize};

/// What the optimizer maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Log-likelihood plus log-prior.
    #[default]
    Posterior,
    /// Log-likelihood alone; priors still set transforms and starting points.
    Likelihood,
}

/// Shared, immutable bundle of model, data and priors. Evaluation is reentrant.
#[derive(Debug, Clone)]
pub struct Posterior<'a> {
    pub model: &'a ObservationModel,
    pub data: &'a TimeSeries,
    pub priors: &'a [Prior],
    transforms: Vec<Transform>,
}

impl<'a> Posterior<'a> {
    pub fn new(model: &'a ObservationModel, data: &'a TimeSeries, priors: &'a [Prior]) -> Result<Self> {
        Self::with_transforms(model, data, priors, priors.iter().map(Prior::transform).collect())
    }

    /// Uses explicit transforms instead of the ones implied by the priors'
    /// supports. Each must map onto a superset of its prior's support.
    pub fn with_transforms(
        model: &'a ObservationModel,
        data: &'a TimeSeries,
        priors: &'a [Prior],
        transforms: Vec<Transform>,
    ) -> Result<Self> {
        if priors.len() != model.dim() || transforms.len() != model.dim() {
            return Err(Error::InvalidPrior(format!(
                "{} priors / {} transforms for {} free parameters {:?}",
                priors.len(),
                transforms.len(),
                model.dim(),
                model.param_names()
            )));
        }
        for p in priors {
            p.validate()?;
        }
        Ok(Self { model, data, priors, transforms })
    }

    pub fn dim(&self) -> usize {
        self.priors.len()
    }

    pub fn transforms(&self) -> &[Transform] {
        &self.transforms
    }

    pub fn to_constrained(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.transforms).map(|(&v, t)| t.to_constrained(v)).collect()
    }

    pub fn to_unconstrained(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.transforms).map(|(&v, t)| t.to_unconstrained(v)).collect()
    }

    pub fn log_prior(&self, x: &[f64]) -> f64 {
        x.iter().zip(self.priors).map(|(&v, p)| p.log_density(v)).sum()
    }

    /// Log-likelihood, `-inf` when the model cannot be evaluated.
    pub fn log_likelihood(&self, x: &[f64]) -> f64 {
        match self.model.loglik(self.data, x) {
            Ok(v) if v.is_finite() => v,
            _ => f64::NEG_INFINITY,
        }
    }

    /// Unnormalized log-posterior in the original coordinates.
    pub fn log_posterior(&self, x: &[f64]) -> f64 {
        let lp = self.log_prior(x);
        if !lp.is_finite() {
            return f64::NEG_INFINITY;
        }
        lp + self.log_likelihood(x)
    }

    pub fn objective(&self, x: &[f64], objective: Objective) -> f64 {
        match objective {
            Objective::Posterior => self.log_posterior(x),
            Objective::Likelihood => {
                if self.log_prior(x).is_finite() { self.log_likelihood(x) } else { f64::NEG_INFINITY }
            }
        }
    }

    /// Sampling target on the unconstrained scale (includes the log-Jacobian).
    pub fn log_target(&self, u: &[f64]) -> f64 {
        let x = self.to_constrained(u);
        let jac: f64 = u.iter().zip(&self.transforms).map(|(&v, t)| t.log_jacobian(v)).sum();
        self.log_posterior(&x) + jac
    }
}
