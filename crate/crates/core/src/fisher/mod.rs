//! Fisher information, Cramér-Rao bounds and variance inflation ratios
//! (VIRs): the factor by which the true sampling variance of an estimator
//! exceeds what an independent-noise fit reports.

mod closed_form;
mod matrix;
mod nuisance;
mod report;

pub use closed_form::{fim_constant_ar1, vir_ar1, vir_arma11, vir_arma_pq_constant, vir_ma1, vir_nonlinear_single};
pub use matrix::{
    fim_initial_state_block, fim_multiparam, vir_initial_state, vir_multiparam_exact, FisherMatrix, CONDITION_LIMIT,
};
pub use nuisance::{nuisance_orthogonality_check, McEstimate, NuisanceReport};
pub use report::{VirEntry, VirFormula, VirReport};

use crate::{Error, Result};

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if !(rho.abs() < 1.0) {
        return Err(Error::NonStationary(format!("|rho| = {} must be below 1", rho.abs())));
    }
    Ok(())
}
