//! Parameter inference for dynamical models observed under autocorrelated
//! measurement noise.
//!
//! The crate covers the full loop: simulate ARMA error processes
//! ([`noise`]), integrate ODE models and their parameter sensitivities
//! ([`odes`]), evaluate conditional, Kalman-filter and dense Gaussian
//! likelihoods ([`likelihood`]), compute Fisher information and variance
//! inflation ratios ([`fisher`]), fit by optimization or MCMC ([`infer`]),
//! diagnose residual autocorrelation and pick a noise model ([`workflow`]),
//! and run replicate studies ([`experiments`]).

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod fisher;
pub mod infer;
pub mod noise;
pub mod likelihood;
pub mod odes;
pub mod seed;
pub mod workflow;

pub use error::{Error, Result};
pub use noise::{NoiseKind, NoiseModel, TimeSeries};
