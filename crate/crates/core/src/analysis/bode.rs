use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ratfun::{poly_roots, Polynomial, RationalTF, RootClass, RootSet, ROOT_MARGIN};

/// Numeric value of `int_0^inf ln|T(jw)| dw / w^2` next to its closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct BodeIntegralReport {
    pub integral_value: f64,
    /// `pi * sum 1/q_k` over the open-RHP zeros `q_k` of `R`.
    pub rhp_zero_sum: f64,
    /// `|integral_value - rhp_zero_sum|`.
    pub residual: f64,
    /// Quadrature error estimate.
    pub quad_error: f64,
    pub q_list: RootSet,
}

/// Serializable summary of a [`BodeIntegralReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodeSummary {
    pub integral_value: f64,
    pub rhp_zero_sum: f64,
    pub residual: f64,
    pub quad_error: f64,
    pub q_re: Vec<f64>,
    pub q_im: Vec<f64>,
}

impl BodeIntegralReport {
    pub fn summary(&self) -> BodeSummary {
        BodeSummary {
            integral_value: self.integral_value,
            rhp_zero_sum: self.rhp_zero_sum,
            residual: self.residual,
            quad_error: self.quad_error,
            q_re: self.q_list.roots.iter().map(|z| z.re).collect(),
            q_im: self.q_list.roots.iter().map(|z| z.im).collect(),
        }
    }
}

/// Checks the complementary-sensitivity integral for a loop `R` with at
/// least a double pole at the origin.
pub fn bode_csi_check(r: &RationalTF) -> Result<BodeIntegralReport> {
    let n = r.num();
    let d = r.den();
    if d.origin_multiplicity() < 2 {
        return Err(Error::Precondition(
            "R must have at least a double pole at s = 0".into(),
        ));
    }
    if n.is_zero() || n.coeff(0) == 0.0 {
        return Err(Error::Precondition("R's numerator must be nonzero at s = 0".into()));
    }
    let closed = n + d;
    let poles = poly_roots(&closed)?;
    if !poles.rhp().is_empty() {
        return Err(Error::Unstable(format!(
            "feedback(R) has {} pole(s) in the open right half plane",
            poles.rhp().len()
        )));
    }
    if !poles.all_lhp() {
        return Err(Error::Precondition(
            "feedback(R) is only marginally stable (poles on the imaginary axis)".into(),
        ));
    }

    let q_list = if n.degree() >= 1 {
        let zeros = poly_roots(n)?;
        RootSet {
            roots: zeros.of_class(RootClass::Rhp),
            margin: ROOT_MARGIN,
        }
    } else {
        RootSet::empty(ROOT_MARGIN)
    };
    // Sum of 1/q over conjugate pairs is real.
    let rhp_zero_sum = PI * q_list.roots.iter().map(|q| q.inv().re).fold(0.0, |a, b| a + b);

    let integrand = LogIntegrand::new(n, &closed);
    let root_scale = poles
        .roots
        .iter()
        .chain(q_list.roots.iter())
        .map(|z| z.norm())
        .chain(zero_moduli(n))
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let small = poles
        .roots
        .iter()
        .map(|z| z.norm())
        .chain(zero_moduli(n))
        .filter(|&m| m > 0.0)
        .fold(f64::INFINITY, f64::min)
        .min(root_scale);
    let omega_max = 1e3 * root_scale;

    // Geometric breakpoints from well below the slowest root to the cutoff.
    let mut edges = vec![0.0, small * 1e-3];
    while *edges.last().unwrap() < omega_max {
        let next = (edges.last().unwrap() * 2.0).min(omega_max);
        edges.push(next);
    }
    let mut value = 0.0;
    let mut err = 0.0;
    for w in edges.windows(2) {
        let (v, e) = adaptive_gk(&|x| integrand.eval(x), w[0], w[1], 1e-12, 1e-14, 30);
        value += v;
        err += e;
    }
    value += integrand.tail(omega_max);

    Ok(BodeIntegralReport {
        integral_value: value,
        rhp_zero_sum,
        residual: (value - rhp_zero_sum).abs(),
        quad_error: err,
        q_list,
    })
}

fn zero_moduli(n: &Polynomial) -> Vec<f64> {
    if n.degree() == 0 {
        return Vec::new();
    }
    poly_roots(n)
        .map(|z| z.roots.iter().map(|r| r.norm()).collect())
        .unwrap_or_default()
}

/// `ln|T(jw)| / w^2` with `T = n / c`, evaluated without cancellation.
///
/// `|n|^2 - |c|^2` is a polynomial in `w` divisible by `w^2` (the loop has a
/// double integrator), so `delta = (|n|^2 - |c|^2) / |c|^2` is formed from
/// exact coefficients and `ln|T| / w^2 = (delta / w^2) * ln1p(delta) / (2 delta)`.
struct LogIntegrand {
    diff_over_w2: Polynomial,
    n_sq: Polynomial,
    c_sq: Polynomial,
    log_lead: f64,
    rel_degree: f64,
}

impl LogIntegrand {
    fn new(n: &Polynomial, c: &Polynomial) -> Self {
        let n_sq = n.abs_sq_on_axis();
        let c_sq = c.abs_sq_on_axis();
        let diff = &n_sq - &c_sq;
        let coeffs = diff.coeffs();
        let reduced = if coeffs.len() > 2 {
            Polynomial::new(coeffs[2..].to_vec()).unwrap_or_else(|_| Polynomial::zero())
        } else {
            Polynomial::zero()
        };
        LogIntegrand {
            diff_over_w2: reduced,
            n_sq,
            c_sq,
            log_lead: (n.leading().abs() / c.leading().abs()).ln(),
            rel_degree: c.degree() as f64 - n.degree() as f64,
        }
    }

    fn eval(&self, w: f64) -> f64 {
        let c2 = self.c_sq.eval_real(w);
        let q = self.diff_over_w2.eval_real(w) / c2;
        let delta = q * w * w;
        if delta < -0.5 {
            // Far from cancellation; the direct ratio avoids ln1p(-1).
            return 0.5 * (self.n_sq.eval_real(w).ln() - c2.ln()) / (w * w);
        }
        let ratio = if delta.abs() < 1e-8 {
            1.0 - delta / 2.0 + delta * delta / 3.0
        } else {
            delta.ln_1p() / delta
        };
        0.5 * q * ratio
    }

    /// `int_W^inf (ln|c_n/c_d| - r ln w) / w^2 dw`.
    fn tail(&self, big_w: f64) -> f64 {
        self.log_lead / big_w - self.rel_degree * (big_w.ln() + 1.0) / big_w
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod rule with its embedded 7-point Gauss estimate.
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod 7-15 with local bisection.
///
/// A subinterval is accepted once its error estimate is below `rel_tol`
/// times its value or below its share of `abs_tol`.
pub fn adaptive_gk(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, abs_tol: f64, max_depth: usize) -> (f64, f64) {
    let mut stack = vec![(a, b, 0usize)];
    let mut total = 0.0;
    let mut err = 0.0;
    let width = (b - a).abs().max(f64::MIN_POSITIVE);
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, e) = gk15(f, lo, hi);
        let share = abs_tol * (hi - lo).abs() / width;
        if e <= rel_tol * v.abs() || e <= share || depth >= max_depth {
            total += v;
            err += e;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    (total, err)
}
