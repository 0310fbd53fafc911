//! Frequency-domain verdicts on transfer functions and vehicle chains.

mod audit;
mod bode;
mod gains;
mod grid;
mod headway;
mod hinf;
mod jury;

pub use audit::{cancellation_audit, AuditKind, AuditWarning, AUDIT_TOL};
pub use bode::{adaptive_gk, bode_csi_check, BodeIntegralReport, BodeSummary};
pub use gains::{
    classify_growth, def1_gain, def1_gain_model, def2_gain, def2_gain_model, gain_vs_n_sweep, largest_singular_value,
    power_iteration, thm2_bound, thm2_bound_links, ChainOperator, GainPeak, GainReport, GrowthClass, NGains,
};
pub use grid::{FrequencyGrid, Peak};
pub use headway::{headway_min_a, headway_min_b, HeadwayMethod, HeadwayResult};
pub use hinf::{hinf, magnitude_inf, HinfResult};
pub use jury::{jury2_check, jury_sweep, trace_peak, JuryPoint};
