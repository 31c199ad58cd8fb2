//! Density evolution on the binary erasure channel: component transfer
//! functions, coupled-chain recursions, thresholds, the area-theorem MAP
//! threshold and the mapping to the Gaussian channel.

pub mod awgn;
pub mod evolution;
pub mod map;
pub mod threshold;
pub mod transfer;

pub use awgn::{awgn_sigma_from_bec, biawgn_capacity, ebn0_db, AwgnThreshold};
pub use evolution::{
    de_run, de_step_pic, de_step_ppc, DeChainState, DeOptions, DeOutcome, Schedule,
};
pub use map::{map_threshold, shortening_fraction, uncoupled_fixed_point, TurboFixedPoint};
pub use threshold::{threshold_bisect, threshold_bisect_in, Threshold};
pub use transfer::{
    default_grid, exact_transfer, mc_transfer, ExactTransfer, GridTransfer, Transfer,
};
