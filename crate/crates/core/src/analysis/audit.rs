use serde::{Deserialize, Serialize};

use super::grid::FrequencyGrid;
use crate::chain::{ChainScenario, Comm};
use crate::ratfun::{DcGain, RationalTF};

/// Relative tolerance for the exact-match checks.
pub const AUDIT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditKind {
    /// `H(0) W(0) = B(0)` in a CACC scenario.
    DcMatch,
    /// `G W = 1` on the whole grid.
    UnitLoop,
    /// A numerator and denominator share a root.
    SharedRoot,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditWarning {
    pub kind: AuditKind,
    pub message: String,
}

fn dc(tf: &RationalTF) -> Option<f64> {
    match tf.dc_gain() {
        DcGain::Finite(v) => Some(v),
        DcGain::Infinite => None,
    }
}

fn unit_loop(g: &RationalTF, w: &RationalTF, grid: &FrequencyGrid) -> bool {
    let gw = match g.mul(w) {
        Ok(v) => v,
        Err(_) => return false,
    };
    grid.points()
        .iter()
        .all(|&om| gw.eval(om).map(|z| (z - 1.0).norm() < AUDIT_TOL).unwrap_or(true))
}

/// Flags exact cancellations a design must not rely on.
pub fn cancellation_audit(sc: &ChainScenario, grid: &FrequencyGrid) -> Vec<AuditWarning> {
    let mut out = Vec::new();
    let coarse = FrequencyGrid {
        points_per_decade: grid.points_per_decade.min(8),
        refinement_depth: 0,
        ..*grid
    };
    match sc.comm() {
        Comm::None => {}
        Comm::Cacc { b, h, w } => {
            if let (Some(b0), Some(h0), Some(w0)) = (dc(b), dc(h), dc(w)) {
                if (h0 * w0 - b0).abs() < AUDIT_TOL * b0.abs().max(1.0) {
                    out.push(AuditWarning {
                        kind: AuditKind::DcMatch,
                        message: format!("H(0)W(0) = {} matches B(0) = {b0}", h0 * w0),
                    });
                }
            }
            if let Ok(g) = h.div(b) {
                if unit_loop(&g, w, &coarse) {
                    out.push(AuditWarning {
                        kind: AuditKind::UnitLoop,
                        message: "HW/B equals 1 at every sampled frequency".into(),
                    });
                }
            }
        }
        Comm::General { g, w, .. } => {
            if unit_loop(g, w, &coarse) {
                out.push(AuditWarning {
                    kind: AuditKind::UnitLoop,
                    message: "GW equals 1 at every sampled frequency".into(),
                });
            }
        }
    }
    for (name, tf) in sc.named_tfs() {
        if let Ok(shared) = tf.shared_roots(AUDIT_TOL) {
            if !shared.is_empty() {
                let list: Vec<String> = shared.iter().map(|z| format!("{z:.6}")).collect();
                out.push(AuditWarning {
                    kind: AuditKind::SharedRoot,
                    message: format!(
                        "{name} has numerator/denominator root(s) in common: {}",
                        list.join(", ")
                    ),
                });
            }
        }
    }
    out
}
