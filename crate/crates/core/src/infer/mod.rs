//! Parameter estimation: restarted Nelder-Mead for MAP / MLE and adaptive
//! Metropolis for posterior sampling, both on an unconstrained scale.

mod diagnostics;
mod mcmc;
mod nelder_mead;
mod optimize;
mod posterior;
mod prior;
mod result;
mod transform;

pub use diagnostics::{quantile, rhat};
pub use mcmc::{sample, sample_posterior, InitStrategy, SamplerConfig};
pub use nelder_mead::{nelder_mead, Minimum, NelderMeadOptions};
pub use optimize::{optimize_map, OptimizeConfig};
pub use posterior::{Objective, Posterior};
pub use prior::Prior;
pub use result::{Chain, FitMethod, FitResult, ParamSummary};
pub use transform::Transform;

/// Bijections implied by each prior's support.
pub fn parameter_transforms(priors: &[Prior]) -> Vec<Transform> {
    priors.iter().map(Prior::transform).collect()
}
