//! Time-domain simulation of the chain for cross-checking the frequency
//! analysis.

mod disturbance;
mod norms;
mod realize;
mod sim;

#[cfg(test)]
mod tests;

pub use disturbance::{
    make_disturbance, make_disturbance_stream, read_series_csv, DisturbanceKind, DisturbanceSpec, Hold, Sampled,
    Target, LOWPASS_HORIZON_FACTOR,
};
pub use norms::{l2_norm, trace_l2_norms, trace_l2_norms_from, write_trace_csv, L2Norms};
pub use realize::{realize, StateSpace};
pub use sim::{
    simulate_chain, simulate_chain_with, RecordSet, SimOptions, SimTrace, DEFAULT_DT, DEFAULT_HORIZON, STEP_POLE_BOUND,
    UNSTABLE_HORIZON_CAP,
};
