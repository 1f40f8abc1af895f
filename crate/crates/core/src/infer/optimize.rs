use super::nelder_mead::{nelder_mead, Minimum, NelderMeadOptions};
use super::{FitMethod, FitResult, Objective, Posterior, Prior};
use crate::likelihood::ObservationModel;
use crate::seed::{derive_seed, rng_from_seed};
use crate::{Error, Result, TimeSeries};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizeConfig {
    pub restarts: usize,
    pub objective: Objective,
    /// Evaluation budget per Nelder-Mead run.
    pub max_evals: usize,
    /// Optional first start (original coordinates); remaining starts come from the priors.
    pub start: Option<Vec<f64>>,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self { restarts: 10, objective: Objective::Posterior, max_evals: 20_000, start: None }
    }
}

const START_ATTEMPTS: usize = 100;
const POLISH_ROUNDS: usize = 6;

/// Restarted Nelder-Mead on the unconstrained scale. Returns the best run.
pub fn optimize_map(
    model: &ObservationModel,
    data: &TimeSeries,
    priors: &[Prior],
    seed: u64,
    config: &OptimizeConfig,
) -> Result<FitResult> {
    let post = Posterior::new(model, data, priors)?;
    let (point, value, evals) = optimize_posterior(&post, seed, config)?;
    // under the likelihood objective this field carries the maximized log-likelihood
    let log_posterior = match config.objective {
        Objective::Posterior => post.log_posterior(&point),
        Objective::Likelihood => value,
    };
    Ok(FitResult {
        method: FitMethod::Optimize,
        model: model.dynamics.name().to_string(),
        noise: model.noise.label(),
        seed,
        param_names: model.param_names(),
        log_posterior,
        point,
        summaries: vec![],
        acceptance: vec![],
        iterations: 0,
        warmup: 0,
        evaluations: evals,
        chains: vec![],
    })
}

/// Returns `(argmax, objective at argmax, evaluations)` in original coordinates.
pub(crate) fn optimize_posterior(
    post: &Posterior<'_>,
    seed: u64,
    config: &OptimizeConfig,
) -> Result<(Vec<f64>, f64, usize)> {
    let restarts = config.restarts.max(1);
    let nm = NelderMeadOptions { max_evals: config.max_evals, ..Default::default() };
    let neg = |u: &[f64]| -post.objective(&post.to_constrained(u), config.objective);

    let runs: Vec<Option<(Minimum, usize)>> = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_from_seed(derive_seed(seed, &[k as u64]));
            let mut start = None;
            if k == 0 {
                if let Some(x) = &config.start {
                    let u = post.to_unconstrained(x);
                    if neg(&u).is_finite() {
                        start = Some(u);
                    }
                }
            }
            if start.is_none() {
                for _ in 0..START_ATTEMPTS {
                    let x: Vec<f64> = post.priors.iter().map(|p| p.sample(&mut rng)).collect();
                    let u = post.to_unconstrained(&x);
                    if neg(&u).is_finite() {
                        start = Some(u);
                        break;
                    }
                }
            }
            let mut m = nelder_mead(neg, &start?, &nm);
            let mut evals = m.evals;
            // restart from the optimum until it stops moving
            for _ in 0..POLISH_ROUNDS {
                let again = nelder_mead(neg, &m.x, &NelderMeadOptions { step: 0.02, ..nm.clone() });
                evals += again.evals;
                let gain = m.f - again.f;
                if again.f <= m.f {
                    m = Minimum { evals, ..again };
                }
                if gain <= 1e-10 * (1.0 + m.f.abs()) {
                    break;
                }
            }
            m.f.is_finite().then_some((m, evals))
        })
        .collect();

    let evals: usize = runs.iter().flatten().map(|(_, e)| e).sum();
    let best = runs
        .into_iter()
        .flatten()
        .map(|(m, _)| m)
        .reduce(|a, b| if b.f < a.f { b } else { a })
        .ok_or_else(|| {
            Error::Optimization(format!(
                "no finite objective from {restarts} restarts ({} prior draws each) for {}",
                START_ATTEMPTS,
                post.model.describe()
            ))
        })?;
    Ok((post.to_constrained(&best.x), -best.f, evals))
}
