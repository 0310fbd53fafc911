//! Frequency- and time-domain string-stability analysis for unidirectional
//! chains of double-integrator vehicles.

pub mod analysis;
pub mod chain;
pub mod error;
pub mod ratfun;
pub mod scenarios;
pub mod simkit;

pub use error::{Error, Result};
pub use num_complex::Complex64;
