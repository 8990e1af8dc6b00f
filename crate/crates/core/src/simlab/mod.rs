//! Empirical validation: exponential codebooks with Poisson-matching
//! selection, the conditional-type sampler, scheme simulation and
//! type-deviation diagnostics.

mod codebook;
mod gcc;
mod pml;
mod simulate;
mod typedev;

pub use codebook::{Codebook, ENUMERATION_LIMIT};
pub use gcc::{gcc_counts, gcc_deviation, gcc_sample, type_deviation};
pub use pml::{pml_bound_check, pml_select, PmlCheck, Selection};
pub use simulate::{simulate, SchemeKind, SimConfig, SimResult, TrialRecord};
pub use typedev::{
    self_info_residual, type_deviation_stats, ResidualSource, SelfInfoResidual, TypeDeviationRow,
};
