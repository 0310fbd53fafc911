use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest polynomial degree accepted from callers.
pub const MAX_DEGREE: usize = 20;

/// Real polynomial in the Laplace variable, coefficients in ascending degree.
///
/// Trailing (highest-degree) zero coefficients are always trimmed, so the
/// leading coefficient is nonzero unless the polynomial is identically zero,
/// which is stored as the single coefficient `0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Builds a polynomial from ascending coefficients, rejecting non-finite
    /// values and degrees above [`MAX_DEGREE`].
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Result<Self> {
        let p = Self::from_vec(coeffs.into());
        if p.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Degree("coefficients must be finite".into()));
        }
        p.check_degree()?;
        Ok(p)
    }

    pub(crate) fn from_vec(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    pub(crate) fn check_degree(&self) -> Result<()> {
        if self.degree() > MAX_DEGREE {
            return Err(Error::Degree(format!(
                "degree {} exceeds the limit of {MAX_DEGREE}",
                self.degree()
            )));
        }
        Ok(())
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: vec![0.0] }
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn constant(c: f64) -> Self {
        Polynomial { coeffs: vec![c] }
    }

    /// The monomial `s`.
    pub fn s() -> Self {
        Polynomial { coeffs: vec![0.0, 1.0] }
    }

    /// `c * s^k`.
    pub fn monomial(c: f64, k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = c;
        Self::from_vec(coeffs)
    }

    /// Real polynomial with the given roots (complex roots must come in
    /// conjugate pairs; imaginary residue is dropped) and leading coefficient.
    pub fn from_roots(roots: &[Complex64], leading: f64) -> Self {
        let mut acc = vec![Complex64::new(leading, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (k, &c) in acc.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * r;
            }
            acc = next;
        }
        Self::from_vec(acc.into_iter().map(|c| c.re).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[self.coeffs.len() - 1]
    }

    /// Coefficient of `s^k` (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// Number of roots at the origin, i.e. the index of the lowest nonzero
    /// coefficient. Zero for the zero polynomial.
    pub fn origin_multiplicity(&self) -> usize {
        self.coeffs.iter().position(|&c| c != 0.0).unwrap_or(0)
    }

    /// Horner evaluation at a complex point.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Sum of `|c_k| * |s|^k`, the natural scale for rounding error of
    /// [`Polynomial::eval`] at `s`.
    pub fn eval_scale(&self, s_abs: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * s_abs + c.abs())
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::from_vec(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn monic(&self) -> Self {
        self.scale(1.0 / self.leading())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::zero();
        }
        Self::from_vec(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
        )
    }

    /// `p(s + a)` by repeated synthetic division (Taylor shift).
    pub fn shift(&self, a: f64) -> Self {
        let mut c = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for j in (i..n - 1).rev() {
                c[j] += a * c[j + 1];
            }
        }
        Self::from_vec(c)
    }

    /// Removes the factor `s^k` for all roots at the origin, returning `k`.
    pub fn deflate_origin(&self) -> (usize, Self) {
        let k = self.origin_multiplicity();
        (k, Self::from_vec(self.coeffs[k..].to_vec()))
    }

    /// Polynomial division `self = q * divisor + r` with `deg r < deg divisor`.
    pub fn div_rem(&self, divisor: &Polynomial) -> (Polynomial, Polynomial) {
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        let dd = divisor.degree();
        if self.degree() < dd {
            return (Self::zero(), self.clone());
        }
        let mut rem = self.coeffs.clone();
        let mut quot = vec![0.0; self.degree() - dd + 1];
        let lead = divisor.leading();
        for k in (0..quot.len()).rev() {
            let q = rem[k + dd] / lead;
            quot[k] = q;
            for (j, &dc) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= q * dc;
            }
            rem[k + dd] = 0.0;
        }
        rem.truncate(dd.max(1));
        (Self::from_vec(quot), Self::from_vec(rem))
    }

    /// `|p(jw)|^2` as a real polynomial in `w` (even powers only).
    pub fn abs_sq_on_axis(&self) -> Polynomial {
        // p(jw) = E(w) + j O(w), E from even coefficients, O from odd ones.
        let n = self.coeffs.len();
        let mut even = vec![0.0; n];
        let mut odd = vec![0.0; n];
        for (k, &c) in self.coeffs.iter().enumerate() {
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if k % 2 == 0 {
                even[k] = sign * c;
            } else {
                odd[k] = sign * c;
            }
        }
        let e = Polynomial::from_vec(even);
        let o = Polynomial::from_vec(odd);
        &(&e * &e) + &(&o * &o)
    }

    /// Largest relative coefficient mismatch against another polynomial,
    /// normalized by the largest coefficient magnitude of either.
    pub fn rel_distance(&self, other: &Polynomial) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        let scale = self
            .coeffs
            .iter()
            .chain(other.coeffs.iter())
            .fold(0.0f64, |m, c| m.max(c.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        (0..n)
            .map(|k| (self.coeff(k) - other.coeff(k)).abs())
            .fold(0.0, f64::max)
            / scale
    }
}

impl TryFrom<Vec<f64>> for Polynomial {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Polynomial::new(v)
    }
}

impl From<Polynomial> for Vec<f64> {
    fn from(p: Polynomial) -> Self {
        p.coeffs
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::from_vec((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::from_vec((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::from_vec(out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0.0 {
                continue;
            }
            let sign = if c < 0.0 { "-" } else { "+" };
            if first {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            match k {
                0 => write!(f, "{a}")?,
                1 if a == 1.0 => write!(f, "s")?,
                1 => write!(f, "{a}s")?,
                _ if a == 1.0 => write!(f, "s^{k}")?,
                _ => write!(f, "{a}s^{k}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    #[test]
    fn trims_trailing_zeros() {
        let p = Polynomial::new(vec![1.0, 2.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.coeffs(), &[1.0, 2.0]);
        assert_eq!(p.degree(), 1);
        let z = Polynomial::new(vec![0.0, 0.0]).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.degree(), 0);
    }

    #[test]
    fn eval_examples() {
        let p = Polynomial::new(vec![3.0, 2.0, 1.0]).unwrap();
        assert_eq!(p.eval(C::new(0.0, 1.0)), C::new(2.0, 2.0));
        assert_eq!(Polynomial::one().eval(C::new(7.0, -3.0)), C::new(1.0, 0.0));
        assert_eq!(Polynomial::s().eval(C::new(3.0, 4.0)), C::new(3.0, 4.0));
    }

    #[test]
    fn rejects_large_degree() {
        assert!(matches!(Polynomial::new(vec![1.0; 22]), Err(Error::Degree(_))));
        assert!(Polynomial::new(vec![1.0; 21]).is_ok());
        assert!(Polynomial::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn shift_and_division() {
        // (s+1)^2 shifted by -1 is s^2.
        let p = Polynomial::new(vec![1.0, 2.0, 1.0]).unwrap();
        assert_eq!(p.shift(-1.0).coeffs(), &[0.0, 0.0, 1.0]);
        // s^2 + 3s + 5 = (s + 1)(s + 2) + 3
        let n = Polynomial::new(vec![5.0, 3.0, 1.0]).unwrap();
        let d = Polynomial::new(vec![1.0, 1.0]).unwrap();
        let (q, r) = n.div_rem(&d);
        assert_eq!(q.coeffs(), &[2.0, 1.0]);
        assert_eq!(r.coeffs(), &[3.0]);
    }

    #[test]
    fn abs_sq_matches_pointwise() {
        let p = Polynomial::new(vec![1.0, -0.3, 2.0, 0.7]).unwrap();
        let q = p.abs_sq_on_axis();
        for &w in &[0.0, 0.3, 1.0, 4.2] {
            let direct = p.eval(C::new(0.0, w)).norm_sqr();
            assert!((q.eval_real(w) - direct).abs() < 1e-12 * (1.0 + direct));
        }
    }

    #[test]
    fn display_is_readable() {
        let p = Polynomial::new(vec![4.0, -1.0, 2.0]).unwrap();
        assert_eq!(p.to_string(), "2s^2 - s + 4");
    }
}
