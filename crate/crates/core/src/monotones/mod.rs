//! Max-relative-entropy quantities, preservability brackets and the solver behind them.

pub mod discrimination;
pub mod dmax;
pub mod preservability;
pub mod report;
pub mod sdp;

pub use discrimination::{optimal_povm, Discrimination};
pub use dmax::{channel_dmax_cp_upper, channel_dmax_input_lower, dmax, dmax_op, info_spectrum_re};
pub use preservability::{
    gamma_of_representative, gamma_quantity, preservability_bracket, preservability_upper, smoothed_preservability_upper,
    smoothing_path, Preservability, PreservabilityParams, SmoothedUpper,
};
pub use report::{combine_kinds, BoundKind, BoundReport};
pub use sdp::{sdp_solve, SdpError, SdpOptions, SdpProblem, SdpSolution};
