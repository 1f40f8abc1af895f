use super::optimize::optimize_posterior;
use super::{Chain, FitMethod, FitResult, OptimizeConfig, Posterior, Prior};
use crate::likelihood::ObservationModel;
use crate::seed::{derive_seed, rng_from_seed, Rng};
use crate::{Error, Result, TimeSeries};
use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Where chains start.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// Independent prior draws.
    Prior,
    /// Draws from the Laplace approximation around the optimum.
    #[default]
    Map,
    /// A fixed point (original coordinates), shared by all chains.
    Point(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub chains: usize,
    /// Total iterations per chain, warmup included.
    pub iterations: usize,
    /// Defaults to half of `iterations`.
    pub warmup: Option<usize>,
    pub init: InitStrategy,
    pub target_acceptance: f64,
    /// Used when `init` is `Map`.
    pub optimize: OptimizeConfig,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            iterations: 2000,
            warmup: None,
            init: InitStrategy::Map,
            target_acceptance: 0.234,
            optimize: OptimizeConfig { restarts: 4, ..Default::default() },
        }
    }
}

impl SamplerConfig {
    pub fn warmup(&self) -> usize {
        self.warmup.unwrap_or(self.iterations / 2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.chains < 1 {
            return Err(Error::Config("need at least one chain".into()));
        }
        if self.warmup() >= self.iterations {
            return Err(Error::Config(format!("warmup {} must be below iterations {}", self.warmup(), self.iterations)));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::Config("target acceptance must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

pub(crate) struct RawChain {
    pub u: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    pub acceptance: f64,
}

const INIT_ATTEMPTS: usize = 100;
const ADAPT_EVERY: usize = 50;

fn cholesky(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let d = cov.nrows();
    let mut jitter = 0.0;
    loop {
        let m = cov + DMatrix::identity(d, d) * jitter;
        if let Some(c) = m.clone().cholesky() {
            return c.l();
        }
        let scale = (0..d).map(|i| cov[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
        jitter = if jitter == 0.0 { 1e-10 * scale } else { jitter * 10.0 };
        if jitter > 1e3 * scale {
            return DMatrix::identity(d, d) * 0.1;
        }
    }
}

/// Adaptive random-walk Metropolis: Haario covariance learning plus
/// Robbins-Monro scaling toward the target acceptance, warmup only.
pub(crate) fn adaptive_metropolis<F: Fn(&[f64]) -> f64>(
    target: &F,
    u0: Vec<f64>,
    cov0: &DMatrix<f64>,
    iterations: usize,
    warmup: usize,
    target_acceptance: f64,
    rng: &mut Rng,
) -> RawChain {
    let d = u0.len();
    let mut u = u0;
    let mut lp = target(&u);
    let mut chol = cholesky(cov0);
    let mut log_scale = (2.38f64 * 2.38 / d as f64).ln();

    let mut mean = DVector::zeros(d);
    let mut m2 = DMatrix::zeros(d, d);
    let mut n_stats = 0usize;
    let reset_at = warmup / 2;
    let adapt_from = (10 * d).max(100);

    let mut out = RawChain { u: Vec::with_capacity(iterations - warmup), target: Vec::new(), acceptance: 0.0 };
    let mut accepted = 0usize;
    let mut z = DVector::zeros(d);
    for it in 0..iterations {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        let step = &chol * &z * (0.5 * log_scale).exp();
        let prop: Vec<f64> = u.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let lp_prop = target(&prop);
        let log_alpha = if lp_prop.is_finite() { (lp_prop - lp).min(0.0) } else { f64::NEG_INFINITY };
        let log_unif: f64 = rng.random::<f64>().ln();
        let accept = log_unif < log_alpha;
        if accept {
            u = prop;
            lp = lp_prop;
        }

        if it < warmup {
            let gain = ((it + 1) as f64).powf(-0.6);
            log_scale += gain * (log_alpha.exp() - target_acceptance);

            if it == reset_at {
                n_stats = 0;
                mean.fill(0.0);
                m2.fill(0.0);
            }
            // Welford update of the running covariance
            n_stats += 1;
            let x = DVector::from_column_slice(&u);
            let delta = &x - &mean;
            mean += &delta / n_stats as f64;
            let delta2 = &x - &mean;
            m2 += &delta * delta2.transpose();
            if n_stats >= adapt_from && (it + 1) % ADAPT_EVERY == 0 {
                let cov = &m2 / (n_stats - 1) as f64;
                chol = cholesky(&cov);
            }
        } else {
            accepted += accept as usize;
            out.u.push(u.clone());
            out.target.push(lp);
        }
    }
    out.acceptance = accepted as f64 / (iterations - warmup) as f64;
    out
}

/// Central-difference Hessian.
pub(crate) fn numerical_hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> DMatrix<f64> {
    let d = x.len();
    let f0 = f(x);
    let mut hess = DMatrix::zeros(d, d);
    let at = |di: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(i, s) in di {
            y[i] += s;
        }
        f(&y)
    };
    for i in 0..d {
        hess[(i, i)] = (at(&[(i, h)]) - 2.0 * f0 + at(&[(i, -h)])) / (h * h);
        for j in 0..i {
            let v = (at(&[(i, h), (j, h)]) - at(&[(i, h), (j, -h)]) - at(&[(i, -h), (j, h)]) + at(&[(i, -h), (j, -h)]))
                / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}

/// Inverse of the negative Hessian of `f` at `x`, if that is positive definite.
pub(crate) fn laplace_covariance<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Option<DMatrix<f64>> {
    let neg_h = -numerical_hessian(f, x, 1e-4);
    if neg_h.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let inv = neg_h.cholesky()?.inverse();
    inv.iter().all(|v| v.is_finite()).then_some(inv)
}

fn draw_near(center: &[f64], chol: &DMatrix<f64>, rng: &mut Rng) -> Vec<f64> {
    let z = DVector::from_fn(center.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    let s = chol * z;
    center.iter().zip(s.iter()).map(|(a, b)| a + b).collect()
}

/// Runs `config.chains` adaptive-Metropolis chains in parallel on the
/// unconstrained scale and summarizes the retained draws.
pub fn sample_posterior(
    model: &ObservationModel,
    data: &TimeSeries,
    priors: &[Prior],
    config: &SamplerConfig,
    seed: u64,
) -> Result<FitResult> {
    let post = Posterior::new(model, data, priors)?;
    sample(&post, config, seed)
}

/// As [`sample_posterior`] on a prepared posterior (custom transforms allowed).
pub fn sample(post: &Posterior<'_>, config: &SamplerConfig, seed: u64) -> Result<FitResult> {
    config.validate()?;
    let d = post.dim();
    let target = |u: &[f64]| post.log_target(u);
    let mut evaluations = 0usize;

    let (center, cov0) = match &config.init {
        InitStrategy::Map => {
            let (x, _, evals) = optimize_posterior(post, derive_seed(seed, &[u64::MAX]), &config.optimize)?;
            evaluations += evals;
            let u = post.to_unconstrained(&x);
            let cov = laplace_covariance(&target, &u).unwrap_or_else(|| DMatrix::identity(d, d) * 0.01);
            (Some(u), cov)
        }
        InitStrategy::Point(x) => {
            let u = post.to_unconstrained(x);
            if !target(&u).is_finite() {
                return Err(Error::Initialization(format!("posterior is not finite at the given start {x:?}")));
            }
            let cov = laplace_covariance(&target, &u).unwrap_or_else(|| DMatrix::identity(d, d) * 0.01);
            (Some(u), cov)
        }
        InitStrategy::Prior => (None, DMatrix::identity(d, d) * 0.01),
    };
    let chol0 = cholesky(&cov0);

    let raw: Vec<Result<RawChain>> = (0..config.chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_from_seed(derive_seed(seed, &[c as u64]));
            let u0 = match (&config.init, &center) {
                (InitStrategy::Map, Some(u)) => (0..INIT_ATTEMPTS)
                    .map(|_| draw_near(u, &chol0, &mut rng))
                    .find(|v| target(v).is_finite())
                    .unwrap_or_else(|| u.clone()),
                (_, Some(u)) => u.clone(),
                (_, None) => (0..INIT_ATTEMPTS)
                    .map(|_| {
                        let x: Vec<f64> = post.priors.iter().map(|p| p.sample(&mut rng)).collect();
                        post.to_unconstrained(&x)
                    })
                    .find(|v| target(v).is_finite())
                    .ok_or_else(|| {
                        Error::Initialization(format!(
                            "chain {c}: posterior not finite at any of {INIT_ATTEMPTS} prior draws"
                        ))
                    })?,
            };
            Ok(adaptive_metropolis(
                &target,
                u0,
                &cov0,
                config.iterations,
                config.warmup(),
                config.target_acceptance,
                &mut rng,
            ))
        })
        .collect();

    let mut chains = Vec::with_capacity(config.chains);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for r in raw {
        let r = r?;
        let mut chain = Chain { draws: Vec::with_capacity(r.u.len()), log_posterior: Vec::new(), acceptance: r.acceptance };
        for (u, t) in r.u.iter().zip(&r.target) {
            let jac: f64 = u.iter().zip(post.transforms()).map(|(&v, tr)| tr.log_jacobian(v)).sum();
            let x = post.to_constrained(u);
            let lp = t - jac;
            if best.as_ref().is_none_or(|(b, _)| lp > *b) {
                best = Some((lp, x.clone()));
            }
            chain.draws.push(x);
            chain.log_posterior.push(lp);
        }
        chains.push(chain);
    }
    evaluations += config.chains * config.iterations;

    let (point, log_posterior) = match (&config.init, &center) {
        (InitStrategy::Map, Some(u)) => {
            let x = post.to_constrained(u);
            let lp = post.log_posterior(&x);
            (x, lp)
        }
        _ => {
            let (lp, x) = best.expect("at least one retained draw");
            (x, lp)
        }
    };

    let mut fit = FitResult {
        method: FitMethod::Mcmc,
        model: post.model.dynamics.name().to_string(),
        noise: post.model.noise.label(),
        seed,
        param_names: post.model.param_names(),
        point,
        log_posterior,
        summaries: vec![],
        acceptance: chains.iter().map(|c| c.acceptance).collect(),
        iterations: config.iterations,
        warmup: config.warmup(),
        evaluations,
        chains,
    };
    fit.summarize()?;
    Ok(fit)
}
