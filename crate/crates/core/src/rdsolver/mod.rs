//! First-order solvers: rate-distortion with tilted information,
//! capacity-cost, the binary-Hamming Wyner-Ziv family, coding instances and
//! first-order stationarity checks.

mod binary_wz;
mod blahut;
mod capacity;
mod instance;
mod stationarity;

pub use binary_wz::{
    wz_binary_family, wz_binary_optimize, wz_rate_formula, wz_time_sharing_candidates, WzBinaryFamily,
    WzBinaryOptimum,
};
pub use blahut::{blahut_arimoto_rd, tilted_information, RDSolution, TiltedInfo, GAP_TOL, MAX_ITERATIONS};
pub use capacity::{capacity_cost, CapacitySolution};
pub use instance::{
    ChannelCost, CodingInstance, DecoderMap, GelfandPinsker, HeegardBerger, IndirectWz, LossySc, MultiDistortionWz,
    SideInfoModel, WynerZiv,
};
pub use instance::noisy_lossy_instance;
pub use stationarity::{first_order_stationarity, perturb_kernel, stationary_aux_kernel};
