use serde::{Deserialize, Serialize};

use super::grid::FrequencyGrid;
use crate::error::{Error, Result};
use crate::ratfun::{DcGain, RationalTF};

/// Peak magnitude of a transfer function on the imaginary axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HinfResult {
    pub peak: f64,
    /// `0` for the DC limit, `inf` for the high-frequency limit.
    pub omega_star: f64,
}

/// Sup of `|tf(jw)|` over the refined grid and both limits `w -> 0`, `w -> inf`.
pub fn hinf(tf: &RationalTF, grid: &FrequencyGrid) -> Result<HinfResult> {
    grid.validate()?;
    let pts = grid.points();
    for &w in &pts {
        tf.eval(w)?;
    }
    let peak = grid.maximize(|w| tf.eval(w).ok().map(|z| z.norm()));
    let mut out = HinfResult {
        peak: peak.value,
        omega_star: peak.omega,
    };
    let dc = match tf.dc_gain() {
        DcGain::Finite(v) => v.abs(),
        DcGain::Infinite => f64::INFINITY,
    };
    if dc >= out.peak {
        out = HinfResult {
            peak: dc,
            omega_star: 0.0,
        };
    }
    let hf = tf.hf_gain();
    if hf > out.peak {
        out = HinfResult {
            peak: hf,
            omega_star: f64::INFINITY,
        };
    }
    if out.peak.is_nan() {
        return Err(Error::Precondition("transfer function has no finite samples".into()));
    }
    Ok(out)
}

/// Inf of `|tf(jw)|` over the refined grid and both limits.
pub fn magnitude_inf(tf: &RationalTF, grid: &FrequencyGrid) -> Result<HinfResult> {
    grid.validate()?;
    for &w in &grid.points() {
        tf.eval(w)?;
    }
    let low = grid.maximize(|w| tf.eval(w).ok().map(|z| -z.norm()));
    let mut out = HinfResult {
        peak: -low.value,
        omega_star: low.omega,
    };
    let dc = tf.dc_gain().value().abs();
    if dc < out.peak {
        out = HinfResult {
            peak: dc,
            omega_star: 0.0,
        };
    }
    let hf = tf.hf_gain();
    if hf < out.peak {
        out = HinfResult {
            peak: hf,
            omega_star: f64::INFINITY,
        };
    }
    Ok(out)
}
