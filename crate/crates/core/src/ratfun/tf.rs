use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::poly::Polynomial;
use super::roots::{is_hurwitz, poly_roots, RootSet, ROOT_MARGIN};
use crate::error::{Error, Result};

/// Relative size of `|den(jw)|` below which evaluation reports a pole.
const POLE_TOL: f64 = 1e-12;

/// Real rational function `num(s) / den(s)` with a monic denominator.
///
/// Common factors of numerator and denominator are never cancelled; use
/// [`RationalTF::shared_roots`] to audit them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTf", into = "RawTf")]
pub struct RationalTF {
    num: Polynomial,
    den: Polynomial,
}

#[derive(Serialize, Deserialize)]
struct RawTf {
    num: Vec<f64>,
    #[serde(default = "unit_den")]
    den: Vec<f64>,
}

fn unit_den() -> Vec<f64> {
    vec![1.0]
}

impl TryFrom<RawTf> for RationalTF {
    type Error = Error;
    fn try_from(raw: RawTf) -> Result<Self> {
        RationalTF::new(Polynomial::new(raw.num)?, Polynomial::new(raw.den)?)
    }
}

impl From<RationalTF> for RawTf {
    fn from(tf: RationalTF) -> Self {
        RawTf {
            num: tf.num.into(),
            den: tf.den.into(),
        }
    }
}

/// Binary and unary combinators accepted by [`RationalTF::combine`].
#[derive(Clone, Copy, Debug)]
pub enum TfOp<'a> {
    Add(&'a RationalTF),
    Sub(&'a RationalTF),
    Mul(&'a RationalTF),
    Div(&'a RationalTF),
    Scale(f64),
    /// `a / (1 + a)`.
    Feedback,
}

/// DC value of a transfer function, which may be infinite (integral action).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DcGain {
    Finite(f64),
    Infinite,
}

impl DcGain {
    pub fn is_zero(&self) -> bool {
        matches!(self, DcGain::Finite(v) if *v == 0.0)
    }

    pub fn value(&self) -> f64 {
        match self {
            DcGain::Finite(v) => *v,
            DcGain::Infinite => f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TfProps {
    pub dc_gain: DcGain,
    /// `deg(den) - deg(num)`.
    pub relative_degree: i32,
    pub stable: bool,
    pub rhp_zeros: RootSet,
}

impl RationalTF {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        num.check_degree()?;
        den.check_degree()?;
        Self::from_parts(num, den)
    }

    fn from_parts(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::SingularTf("denominator is identically zero".into()));
        }
        let k = 1.0 / den.leading();
        Ok(RationalTF {
            num: num.scale(k),
            den: den.scale(k),
        })
    }

    fn checked(num: Polynomial, den: Polynomial) -> Result<Self> {
        let tf = Self::from_parts(num, den)?;
        tf.num.check_degree()?;
        tf.den.check_degree()?;
        Ok(tf)
    }

    /// Convenience constructor from ascending coefficient slices.
    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(Polynomial::new(num.to_vec())?, Polynomial::new(den.to_vec())?)
    }

    pub fn constant(c: f64) -> Self {
        RationalTF {
            num: Polynomial::constant(c),
            den: Polynomial::one(),
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// The Laplace variable `s`.
    pub fn s() -> Self {
        RationalTF {
            num: Polynomial::s(),
            den: Polynomial::one(),
        }
    }

    pub fn polynomial(p: Polynomial) -> Result<Self> {
        Self::new(p, Polynomial::one())
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn combine(&self, op: TfOp<'_>) -> Result<RationalTF> {
        match op {
            TfOp::Add(b) => Self::checked(&(&self.num * &b.den) + &(&b.num * &self.den), &self.den * &b.den),
            TfOp::Sub(b) => Self::checked(&(&self.num * &b.den) - &(&b.num * &self.den), &self.den * &b.den),
            TfOp::Mul(b) => Self::checked(&self.num * &b.num, &self.den * &b.den),
            TfOp::Div(b) => {
                if b.num.is_zero() {
                    return Err(Error::SingularTf("division by the zero function".into()));
                }
                Self::checked(&self.num * &b.den, &self.den * &b.num)
            }
            TfOp::Scale(k) => Ok(RationalTF {
                num: self.num.scale(k),
                den: self.den.clone(),
            }),
            TfOp::Feedback => {
                let den = &self.den + &self.num;
                if den.is_zero() {
                    return Err(Error::SingularTf("1 + a is identically zero".into()));
                }
                Self::checked(self.num.clone(), den)
            }
        }
    }

    pub fn add(&self, b: &RationalTF) -> Result<RationalTF> {
        self.combine(TfOp::Add(b))
    }

    pub fn sub(&self, b: &RationalTF) -> Result<RationalTF> {
        self.combine(TfOp::Sub(b))
    }

    pub fn mul(&self, b: &RationalTF) -> Result<RationalTF> {
        self.combine(TfOp::Mul(b))
    }

    pub fn div(&self, b: &RationalTF) -> Result<RationalTF> {
        self.combine(TfOp::Div(b))
    }

    pub fn scale(&self, k: f64) -> RationalTF {
        RationalTF {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    pub fn feedback(&self) -> Result<RationalTF> {
        self.combine(TfOp::Feedback)
    }

    pub fn recip(&self) -> Result<RationalTF> {
        RationalTF::constant(1.0).div(self)
    }

    /// Value at `s = j*omega`.
    pub fn eval(&self, omega: f64) -> Result<Complex64> {
        let s = Complex64::new(0.0, omega);
        let d = self.den.eval(s);
        if d.norm() <= POLE_TOL * self.den.eval_scale(omega.abs()) {
            return Err(Error::NearPole { omega });
        }
        Ok(self.num.eval(s) / d)
    }

    /// Value at an arbitrary complex point (no pole check).
    pub fn eval_at(&self, s: Complex64) -> Complex64 {
        self.num.eval(s) / self.den.eval(s)
    }

    pub fn relative_degree(&self) -> i32 {
        if self.num.is_zero() {
            return i32::MAX;
        }
        self.den.degree() as i32 - self.num.degree() as i32
    }

    pub fn is_proper(&self) -> bool {
        self.relative_degree() >= 0
    }

    /// Limit of the function as `s -> 0`, without cancelling any factor
    /// other than the powers of `s` needed to take the limit.
    pub fn dc_gain(&self) -> DcGain {
        if self.num.is_zero() {
            return DcGain::Finite(0.0);
        }
        let zn = self.num.origin_multiplicity();
        let zd = self.den.origin_multiplicity();
        if zn > zd {
            DcGain::Finite(0.0)
        } else if zn < zd {
            DcGain::Infinite
        } else {
            DcGain::Finite(self.num.coeff(zn) / self.den.coeff(zd))
        }
    }

    /// Limit of `|tf(jw)|` as `w -> infinity`.
    pub fn hf_gain(&self) -> f64 {
        match self.relative_degree() {
            0 => (self.num.leading() / self.den.leading()).abs(),
            r if r > 0 => 0.0,
            _ => f64::INFINITY,
        }
    }

    pub fn is_stable(&self) -> bool {
        is_hurwitz(&self.den, ROOT_MARGIN)
    }

    pub fn poles(&self) -> Result<RootSet> {
        if self.den.degree() == 0 {
            return Ok(RootSet::empty(ROOT_MARGIN));
        }
        poly_roots(&self.den)
    }

    pub fn zeros(&self) -> Result<RootSet> {
        if self.num.degree() == 0 {
            return Ok(RootSet::empty(ROOT_MARGIN));
        }
        poly_roots(&self.num)
    }

    pub fn props(&self) -> Result<TfProps> {
        let zeros = self.zeros()?;
        let rhp = RootSet {
            roots: zeros.rhp(),
            margin: zeros.margin,
        };
        Ok(TfProps {
            dc_gain: self.dc_gain(),
            relative_degree: self.relative_degree(),
            stable: self.is_stable(),
            rhp_zeros: rhp,
        })
    }

    /// Numerator roots that match a denominator root within `tol`
    /// (relative to `1 + |root|`). Reported, never removed.
    pub fn shared_roots(&self, tol: f64) -> Result<Vec<Complex64>> {
        let zeros = self.zeros()?;
        let poles = self.poles()?;
        let mut used = vec![false; poles.len()];
        let mut shared = Vec::new();
        for z in &zeros.roots {
            let hit = poles
                .roots
                .iter()
                .enumerate()
                .find(|(i, p)| !used[*i] && (*z - **p).norm() <= tol * (1.0 + z.norm()));
            if let Some((i, _)) = hit {
                used[i] = true;
                shared.push(*z);
            }
        }
        Ok(shared)
    }

    /// Equality as rational functions: `n1*d2 - n2*d1` vanishes to `tol`
    /// relative to the coefficient scale.
    pub fn equiv(&self, other: &RationalTF, tol: f64) -> bool {
        let lhs = &self.num * &other.den;
        let rhs = &other.num * &self.den;
        lhs.rel_distance(&rhs) <= tol
    }
}

impl fmt::Display for RationalTF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}

/// Functional form of the five combinators.
pub fn tf_combine(op: TfOp<'_>, a: &RationalTF) -> Result<RationalTF> {
    a.combine(op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn tf(n: &[f64], d: &[f64]) -> RationalTF {
        RationalTF::from_coeffs(n, d).unwrap()
    }

    #[test]
    fn canonical_form_has_monic_denominator() {
        let t = tf(&[4.0, 1.0], &[4.0, 5.0, 2.0]);
        assert_eq!(t.den().leading(), 1.0);
        assert_eq!(t.num().coeffs(), &[2.0, 0.5]);
        assert!(matches!(
            RationalTF::from_coeffs(&[1.0], &[0.0]),
            Err(Error::SingularTf(_))
        ));
    }

    #[test]
    fn feedback_of_pd_over_double_integrator() {
        let r = tf(&[4.0, 1.0], &[0.0, 0.0, 1.0]);
        let t = r.feedback().unwrap();
        assert!(t.equiv(&tf(&[4.0, 1.0], &[4.0, 1.0, 1.0]), 1e-15));
    }

    #[test]
    fn product_keeps_and_reports_shared_root() {
        let a = tf(&[1.0], &[1.0, 1.0]);
        let b = tf(&[1.0, 1.0], &[1.0]);
        let p = a.mul(&b).unwrap();
        assert_eq!(p.num().coeffs(), &[1.0, 1.0]);
        assert_eq!(p.den().coeffs(), &[1.0, 1.0]);
        let shared = p.shared_roots(1e-9).unwrap();
        assert_eq!(shared.len(), 1);
        assert_abs_diff_eq!(shared[0].re, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn sum_of_integrators() {
        let i = tf(&[1.0], &[0.0, 1.0]);
        let two = i.add(&i).unwrap();
        assert!(two.equiv(&tf(&[2.0], &[0.0, 1.0]), 1e-15));
    }

    #[test]
    fn evaluation_examples() {
        let t = tf(&[4.0, 1.0], &[4.0, 5.0, 2.0]);
        assert_abs_diff_eq!(t.eval(0.0).unwrap().re, 1.0, epsilon = 1e-15);
        let dd = tf(&[1.0], &[0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(dd.eval(1.0).unwrap().re, -1.0, epsilon = 1e-15);
        let v = tf(&[1.0], &[1.0, 1.0, 1.0]).eval(1.0).unwrap();
        assert_abs_diff_eq!(v.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, -1.0, epsilon = 1e-15);
        assert!(matches!(dd.eval(0.0), Err(Error::NearPole { .. })));
        assert!(matches!(
            tf(&[1.0], &[4.0, 0.0, 1.0]).eval(2.0),
            Err(Error::NearPole { .. })
        ));
    }

    #[test]
    fn props_examples() {
        let pid = tf(&[1.0, 2.0, 1.0], &[0.0, 1.0]);
        assert_eq!(pid.dc_gain(), DcGain::Infinite);
        let pd = tf(&[4.0, 1.0], &[1.0]);
        let p = pd.props().unwrap();
        assert_eq!(p.dc_gain, DcGain::Finite(4.0));
        assert_eq!(p.relative_degree, -1);
        // (2s+1)(1-0.1s)/s^2
        let num = &Polynomial::new(vec![1.0, 2.0]).unwrap() * &Polynomial::new(vec![1.0, -0.1]).unwrap();
        let r = RationalTF::new(num, Polynomial::monomial(1.0, 2)).unwrap();
        let rp = r.props().unwrap();
        assert_eq!(rp.rhp_zeros.len(), 1);
        assert_abs_diff_eq!(rp.rhp_zeros.roots[0].re, 10.0, epsilon = 1e-10);
        assert_eq!(rp.dc_gain, DcGain::Infinite);
        assert!(!rp.stable);
    }

    #[test]
    fn serde_accepts_missing_den() {
        let t: RationalTF = serde_json::from_str(r#"{"num":[4.0,1.0]}"#).unwrap();
        assert_eq!(t.den().coeffs(), &[1.0]);
        let back = serde_json::to_string(&t).unwrap();
        assert_eq!(back, r#"{"num":[4.0,1.0],"den":[1.0]}"#);
    }

    fn small_tf() -> impl Strategy<Value = RationalTF> {
        (
            prop::collection::vec(-3.0f64..3.0, 1..4),
            prop::collection::vec(-3.0f64..3.0, 1..4),
            0.5f64..2.0,
        )
            .prop_map(|(n, mut d, lead)| {
                d.push(lead);
                RationalTF::from_coeffs(&n, &d).unwrap()
            })
    }

    proptest! {
        #[test]
        fn product_evaluates_pointwise(a in small_tf(), b in small_tf(), w in 0.01f64..50.0) {
            let (Ok(va), Ok(vb)) = (a.eval(w), b.eval(w)) else { return Ok(()); };
            if va.norm() > 1e6 || vb.norm() > 1e6 { return Ok(()); }
            let vp = a.mul(&b).unwrap().eval(w).unwrap();
            prop_assert!((vp - va * vb).norm() <= 1e-10 * (1.0 + (va * vb).norm()));
        }

        #[test]
        fn feedback_evaluates_pointwise(r in small_tf(), w in 0.01f64..50.0) {
            let Ok(vr) = r.eval(w) else { return Ok(()); };
            let one_plus = Complex64::new(1.0, 0.0) + vr;
            if one_plus.norm() < 1e-3 || vr.norm() > 1e6 { return Ok(()); }
            let vt = r.feedback().unwrap().eval(w).unwrap();
            prop_assert!((vt - vr / one_plus).norm() <= 1e-10 * (1.0 + vt.norm()));
        }
    }
}
