use serde::{Deserialize, Serialize};

use super::grid::FrequencyGrid;
use crate::error::{Error, Result};
use crate::ratfun::{is_hurwitz, DcGain, Polynomial, RationalTF, ROOT_MARGIN};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadwayMethod {
    CriterionA,
    CriterionB,
    PdShortcut,
}

/// Smallest admissible time headway; any `h > h_min` gives `|T(jw)| < 1`
/// for `w != 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadwayResult {
    pub h_min: f64,
    /// Frequency attaining the sup (`0` for the DC limit).
    pub argmax_omega: f64,
    pub method: HeadwayMethod,
}

/// Criterion for a loop shaped as `Kbar = K (1 + hs)` fixed in advance.
///
/// `h_min^2 = sup_w (|Tbar|^2 - 1) / w^2` with `Tbar = Kbar / (s^2 + Kbar)`.
pub fn headway_min_a(kbar: &RationalTF, grid: &FrequencyGrid) -> Result<HeadwayResult> {
    grid.validate()?;
    let n = kbar.num();
    let c = &(&Polynomial::monomial(1.0, 2) * kbar.den()) + n;
    if !is_hurwitz(&c, ROOT_MARGIN) {
        return Err(Error::Unstable(
            "feedback(Kbar / s^2) has poles off the open left half plane".into(),
        ));
    }
    let c_sq = c.abs_sq_on_axis();
    let diff = &n.abs_sq_on_axis() - &c_sq;
    // `diff` vanishes to second order at w = 0 because c(0) = n(0).
    let reduced = Polynomial::new(diff.coeffs().iter().skip(2).copied().collect::<Vec<_>>())?;
    let g = |w: f64| reduced.eval_real(w) / c_sq.eval_real(w);
    let peak = grid.maximize(|w| Some(g(w)));
    let (mut best, mut arg) = (peak.value, peak.omega);
    let g0 = g(0.0);
    if g0 >= best {
        best = g0;
        arg = 0.0;
    }
    Ok(HeadwayResult {
        h_min: best.max(0.0).sqrt(),
        argmax_omega: arg,
        method: HeadwayMethod::CriterionA,
    })
}

/// `K = bs + a` with `b > 0`, if `K` has that form.
fn as_pd(k: &RationalTF) -> Option<(f64, f64)> {
    if k.num().degree() == 1 && k.den().degree() == 0 {
        let d = k.den().coeff(0);
        let b = k.num().coeff(1) / d;
        let a = k.num().coeff(0) / d;
        (b > 0.0).then_some((b, a))
    } else {
        None
    }
}

/// Criterion for a controller `K` fixed in advance:
/// `h_min = sup_w sqrt(K_R (2 - w^2 K_R)) + w K_J` over frequencies where the
/// square-root argument is positive, with `1/K(jw) = K_R + j K_J`.
pub fn headway_min_b(k: &RationalTF, grid: &FrequencyGrid) -> Result<HeadwayResult> {
    grid.validate()?;
    if let Some((b, a)) = as_pd(k) {
        if a > 2.0 * b * b {
            return Ok(HeadwayResult {
                h_min: (2.0 / a).sqrt(),
                argmax_omega: 0.0,
                method: HeadwayMethod::PdShortcut,
            });
        }
    }
    let kinv = k.recip()?;
    for w in grid.points() {
        kinv.eval(w)?;
    }
    let f = |w: f64| {
        let z = kinv.eval(w).ok()?;
        let arg = z.re * (2.0 - w * w * z.re);
        (arg > 0.0).then(|| arg.sqrt() + w * z.im)
    };
    let peak = grid.maximize(f);
    let (mut best, mut arg) = (peak.value, peak.omega);
    // DC limit: K_R(0) = 1/K(0), K_J(0) = 0.
    let dc = match k.dc_gain() {
        DcGain::Finite(v) if v > 0.0 => (2.0 / v).sqrt(),
        _ => 0.0,
    };
    if dc >= best {
        best = dc;
        arg = 0.0;
    }
    Ok(HeadwayResult {
        h_min: best.max(0.0),
        argmax_omega: arg,
        method: HeadwayMethod::CriterionB,
    })
}
