//! Finite-alphabet probability objects.
//!
//! Every tabulated object is a [`RealFunc`]: a dense row-major table over a
//! product of named [`Alphabet`]s (last factor fastest). Factors are matched
//! by name, so a function of `X` broadcasts onto a domain `X x U x Y`.
//! Information densities are stored with `NaN` at zero-mass cells; reading
//! such a cell under a measure that charges it is an [`Error::Undominated`].
//!
//! [`Error::Undominated`]: crate::Error::Undominated

mod alphabet;
mod dist;
mod func;
mod info;
mod tangent;

pub use alphabet::Alphabet;
pub use dist::{empirical_type, empirical_type_indices, CondKernel, ProbVec};
pub use func::{for_each_index, RealFunc};
pub use info::{
    cond_expectation, cond_info_density, covariance_matrix, entropy, expectation, expected_cond_covariance,
    info_density, info_functionals, self_information, variance, variance_of_cond_expectation, InfoFunctionals,
};
pub use tangent::{is_dominated, tangent_basis, tangent_deltas, TangentBase, TangentVec};

/// Tolerance on the total mass of a pmf or a kernel row.
pub const SUM_TOL: f64 = 1e-12;
