//! Second-order bounds: dispersions, the threshold-optimized error
//! probability `P_e*`, its Gaussian-mixture expectation, rate inversion and
//! the competing Wyner-Ziv bounds.

mod compare;
mod pe;
mod terms;

pub use compare::{
    binary_wz_dispersions, comparison_suite, evaluate_instance, instance_digest, open_grid, BinaryWzRow,
    BoundReport, ComparisonReport, ComparisonRow,
};
pub use pe::{
    channel_rate_for_epsilon, expected_pe, pe_star, pe_star_vector, rate_for_epsilon, three_event_pe, ExpectedPe,
    PeStar, RateForEpsilon,
};
pub use terms::{
    cc_dispersion, gp_dispersion, lsc_dispersion, v_competitors, v_gcc, v_wkt, wz_second_order_terms, Competitors,
    GccDispersion, GpDispersion, QuantileArgument, RateDirection, SecondOrderTerms, TermDiagnostics, WktTerms,
    ASSUMPTION_EIG_TOL,
};
