use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ratfun::RationalTF;

/// `y = C x + D u + E du/dt`, `dx/dt = A x + B u`, with `A` in controllable
/// canonical (companion) form.
///
/// The derivative tap `E` carries the one power of `s` an improper
/// controller such as PD or PID may have.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    pub a_mat: DMatrix<f64>,
    pub b_vec: DVector<f64>,
    pub c_vec: DVector<f64>,
    pub d: f64,
    pub e: f64,
    /// Monic denominator coefficients `a_0..a_{n-1}`; row `n-1` of `A` is `-a`.
    den: Vec<f64>,
}

impl StateSpace {
    pub fn order(&self) -> usize {
        self.den.len()
    }

    /// `C (sI - A)^{-1} B + D + E s`.
    pub fn transfer(&self, s: Complex64) -> Complex64 {
        let n = self.order();
        let mut out = Complex64::new(self.d, 0.0) + s * self.e;
        if n == 0 {
            return out;
        }
        let m = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
            let a = Complex64::new(self.a_mat[(i, j)], 0.0);
            if i == j {
                s - a
            } else {
                -a
            }
        });
        let b = DVector::<Complex64>::from_fn(n, |i, _| Complex64::new(self.b_vec[i], 0.0));
        match m.lu().solve(&b) {
            Some(x) => {
                for i in 0..n {
                    out += x[i] * self.c_vec[i];
                }
                out
            }
            None => Complex64::new(f64::NAN, f64::NAN),
        }
    }

    /// `A x + B u` written into `dx`, using the companion structure.
    #[inline]
    pub fn deriv(&self, x: &[f64], u: f64, dx: &mut [f64]) {
        let n = self.den.len();
        if n == 0 {
            return;
        }
        dx[..n - 1].copy_from_slice(&x[1..n]);
        let last = u - self.den.iter().zip(x).map(|(a, xk)| a * xk).sum::<f64>();
        dx[n - 1] = last;
    }

    /// `C x`, the strictly proper part of the output.
    #[inline]
    pub fn state_output(&self, x: &[f64]) -> f64 {
        let mut y = 0.0;
        for (k, &xk) in x.iter().enumerate() {
            y += self.c_vec[k] * xk;
        }
        y
    }

    /// `C (A x + B u)`, the time derivative of `C x`.
    #[inline]
    pub fn state_output_rate(&self, x: &[f64], u: f64) -> f64 {
        let n = self.den.len();
        if n == 0 {
            return 0.0;
        }
        let mut y = 0.0;
        for k in 0..n - 1 {
            y += self.c_vec[k] * x[k + 1];
        }
        let mut last = u;
        for k in 0..n {
            last -= self.den[k] * x[k];
        }
        y + self.c_vec[n - 1] * last
    }

    /// Largest pole modulus of the realization.
    pub fn fastest_pole(&self) -> f64 {
        if self.order() == 0 {
            return 0.0;
        }
        self.a_mat
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Controllable canonical realization of `tf`.
///
/// Relative degree `-1` is absorbed into the derivative tap; anything more
/// improper is rejected.
pub fn realize(tf: &RationalTF) -> Result<StateSpace> {
    let rd = tf.relative_degree();
    if rd < -1 {
        return Err(Error::ImproperTf(format!(
            "relative degree {rd} needs more than one derivative of the input"
        )));
    }
    let den = tf.den();
    let n = den.degree();
    let (q, r) = if tf.num().is_zero() {
        (crate::ratfun::Polynomial::zero(), crate::ratfun::Polynomial::zero())
    } else {
        tf.num().div_rem(den)
    };
    let lead = den.leading();
    let a: Vec<f64> = (0..n).map(|k| den.coeff(k) / lead).collect();
    let c: Vec<f64> = (0..n).map(|k| r.coeff(k) / lead).collect();
    let mut a_mat = DMatrix::<f64>::zeros(n, n);
    for k in 0..n.saturating_sub(1) {
        a_mat[(k, k + 1)] = 1.0;
    }
    if n > 0 {
        for k in 0..n {
            a_mat[(n - 1, k)] = -a[k];
        }
    }
    let mut b_vec = DVector::<f64>::zeros(n);
    if n > 0 {
        b_vec[n - 1] = 1.0;
    }
    Ok(StateSpace {
        a_mat,
        b_vec,
        c_vec: DVector::from_vec(c),
        d: q.coeff(0),
        e: q.coeff(1),
        den: a,
    })
}
