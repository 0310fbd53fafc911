use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{FrequencyGrid, Peak};
use crate::chain::{ChainScenario, LinkMaps};
use crate::error::Result;

/// Discrete-time stability test for a 2x2 map given by trace and determinant:
/// `|det| <= 1` and `|conj(det) trace - conj(trace)| <= 1 - |det|^2`.
///
/// Holds iff both eigenvalues lie in the closed unit disk.
pub fn jury2_check(trace: Complex64, det: Complex64) -> bool {
    let d = det.norm();
    d <= 1.0 && (det.conj() * trace - trace.conj()).norm() <= 1.0 - d * d
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JuryPoint {
    pub omega: f64,
    pub trace_re: f64,
    pub trace_im: f64,
    pub det_re: f64,
    pub det_im: f64,
    pub pass: bool,
}

/// Link-map test at every base grid point. Scalar links are checked as
/// `trace = T`, `det = 0`.
pub fn jury_sweep(sc: &ChainScenario, grid: &FrequencyGrid) -> Result<Vec<JuryPoint>> {
    grid.validate()?;
    let links = crate::chain::build_links(sc)?;
    let mut out = Vec::new();
    for w in grid.points() {
        let Ok(at) = links.at(w) else { continue };
        let (tr, det) = match links {
            LinkMaps::Scalar(_) => (at.t[0][0], Complex64::new(0.0, 0.0)),
            LinkMaps::Block2(_) => (at.trace(), at.det()),
        };
        out.push(JuryPoint {
            omega: w,
            trace_re: tr.re,
            trace_im: tr.im,
            det_re: det.re,
            det_im: det.im,
            pass: jury2_check(tr, det),
        });
    }
    Ok(out)
}

/// Sup over frequency of `|trace T(jw)|` (of `|T|` for scalar links).
pub fn trace_peak(sc: &ChainScenario, grid: &FrequencyGrid) -> Result<Peak> {
    grid.validate()?;
    let links = crate::chain::build_links(sc)?;
    Ok(grid.maximize(|w| {
        links.at(w).ok().map(|at| match links {
            LinkMaps::Scalar(_) => at.t[0][0].norm(),
            LinkMaps::Block2(_) => at.trace().norm(),
        })
    }))
}
