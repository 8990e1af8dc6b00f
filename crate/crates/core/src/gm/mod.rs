//! Gaussian-multinomial calculus.
//!
//! `NM(P)` is the Gaussian limit of `sqrt(n) (P_hat_n - P)`: zero mean,
//! covariance `diag(P) - P P^T`. Conditional versions are independent per
//! conditioning cell. Composition rules turn a deviation of `P_X` plus a
//! kernel into a deviation of the joint, and linear functionals push a
//! deviation forward to a finite-dimensional Gaussian whose orthant
//! probabilities are computed in [`orthant`].

mod orthant;
mod sample;
mod spec;

pub use orthant::{gaussian_orthant, OrthantProb, QMC_POINTS};
pub use sample::{sample_gaussian, GaussianSampler};
pub use spec::{
    compose_channel_deviation, compose_gcc_deviation, linear_pushforward, nm_covariance, nm_cond_covariance,
    nm_of_joint, GaussianSpec, ScalarGaussian, Zeta,
};
