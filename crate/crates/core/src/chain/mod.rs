//! Closed-loop link maps of a homogeneous vehicle chain and the full
//! disturbance-to-error frequency response.

mod freq;
mod links;
mod scenario;

pub use freq::{cascade_matrix, chain_freq_matrix, leader_matrix, own_disturbance_matrix, ChainFreqMatrix, ChainModel};
pub use links::{
    build_cacc_link, build_general_link, build_headway_link, build_links, build_sensor_link, Block2Link, LinkAtOmega,
    LinkMaps, ScalarLink, SensorLink,
};
pub use scenario::{ChainScenario, Comm, Sensors, Variant};
