//! Error processes: IID Gaussian, AR(1), MA(1) and general ARMA(p, q).
//!
//! A process is written
//!
//! ```text
//! e(t) = rho_1 e(t-1) + ... + rho_p e(t-p) + v(t) + phi_1 v(t-1) + ... + phi_q v(t-q)
//! ```
//!
//! with innovations `v(t) ~ N(0, sigma^2)` IID.

mod acf;
mod model;
mod series;
mod simulate;

pub use acf::{autocovariances, sample_acf, theoretical_acf};
pub use model::{
    ar_to_pacf, is_invertible, is_stationary, pacf_to_ar, psi_weights, LagPolynomials,
    NoiseKind, NoiseModel,
};
pub use series::TimeSeries;
pub use simulate::{
    draw_innovations, filter_innovations, simulate_noise, simulate_noise_with_rng,
    DEFAULT_BURN_IN,
};

use crate::Result;

/// Stationary variance `gamma_0 = var(e(t))`.
///
/// Closed forms are used for IID, AR(1), MA(1) and ARMA(1,1); otherwise the
/// MA(infinity) expansion is summed until its terms fall below `1e-14` of the
/// running total.
pub fn process_variance(model: &NoiseModel) -> Result<f64> {
    model.check_stationary()?;
    let s2 = model.sigma() * model.sigma();
    let (rho, phi) = (model.rho(), model.phi());
    let v = match (rho.len(), phi.len()) {
        (0, 0) => s2,
        (1, 0) => s2 / (1.0 - rho[0] * rho[0]),
        (0, 1) => s2 * (1.0 + phi[0] * phi[0]),
        (1, 1) => {
            let (r, f) = (rho[0], phi[0]);
            s2 * (1.0 + f * f + 2.0 * f * r) / (1.0 - r * r)
        }
        _ => {
            let psi = psi_weights(rho, phi, 0);
            s2 * psi.iter().map(|w| w * w).sum::<f64>()
        }
    };
    Ok(v)
}
