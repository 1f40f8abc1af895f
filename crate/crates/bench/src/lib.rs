//! Shared fixtures for the criterion benchmarks in `benches/`.

use corrnoise::noise::simulate_noise;
use corrnoise::odes::{HergModel, VoltageProtocol};
use corrnoise::{NoiseModel, TimeSeries};

/// Representative hERG parameters near the centre of the usual priors.
pub const HERG_PARAMS: [f64; 9] = [36_000.0, 0.08, 90.0, 0.03, 54.6, 90.0, 20.0, 7.4, 33.0];

/// Logistic parameters `(r, kappa, x0)` used throughout.
pub const LOGISTIC_PARAMS: [f64; 3] = [0.5, 50.0, 1.0];

/// `n` draws of a stationary noise process with a fixed seed.
pub fn noise_series(model: &NoiseModel, n: usize) -> Vec<f64> {
    simulate_noise(model, n, 7, 200).expect("valid noise model").values().to_vec()
}

/// hERG model on the synthetic staircase with a 10 kHz grid.
pub fn herg_fixture() -> (HergModel, TimeSeries) {
    let model = HergModel::new(VoltageProtocol::synthetic_staircase());
    let grid = TimeSeries::grid(0.0, model.duration(), (model.duration() * 1e4) as usize + 1).expect("grid");
    (model, grid)
}
