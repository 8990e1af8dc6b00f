//! Second-order achievability bounds for lossy source coding and channel
//! coding with side information, built on the Gaussian-multinomial limit of
//! empirical types.
//!
//! Modules, bottom-up:
//! - [`probkit`]: finite alphabets, pmfs, kernels, tensor-valued functions
//!   with broadcast, information densities and conditional moments.
//! - [`gm`]: Gaussian-multinomial covariances, deviation composition,
//!   Gaussian orthant probabilities and sampling.
//! - [`rdsolver`]: Blahut-Arimoto solvers, the binary-Hamming Wyner-Ziv
//!   family, coding instances and first-order stationarity.
//! - [`bounds`]: second-order terms, `P_e*`, dispersions and bound
//!   comparisons.
//! - [`simlab`]: Poisson-matching codebooks, the conditional-type sampler,
//!   scheme simulation and type-deviation statistics.
//! - [`cli`]: command implementations behind the `secondorder` binary.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod gm;
pub mod numeric;
pub mod probkit;
pub mod rdsolver;
pub mod simlab;

pub use error::{Error, Result};
