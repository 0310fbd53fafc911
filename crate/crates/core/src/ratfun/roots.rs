use nalgebra::DMatrix;
use num_complex::Complex64;

use super::poly::Polynomial;
use crate::error::{Error, Result};

/// Default half-width of the band around the imaginary axis in which a root
/// is classified as a boundary root.
pub const ROOT_MARGIN: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RootClass {
    Lhp,
    Rhp,
    Boundary,
}

/// Complex roots of a real polynomial, listed with multiplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    pub margin: f64,
}

impl RootSet {
    pub fn empty(margin: f64) -> Self {
        RootSet {
            roots: Vec::new(),
            margin,
        }
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn classify(&self, r: Complex64) -> RootClass {
        if r.re < -self.margin {
            RootClass::Lhp
        } else if r.re > self.margin {
            RootClass::Rhp
        } else {
            RootClass::Boundary
        }
    }

    pub fn of_class(&self, class: RootClass) -> Vec<Complex64> {
        self.roots
            .iter()
            .copied()
            .filter(|&r| self.classify(r) == class)
            .collect()
    }

    pub fn rhp(&self) -> Vec<Complex64> {
        self.of_class(RootClass::Rhp)
    }

    pub fn all_lhp(&self) -> bool {
        self.roots.iter().all(|&r| self.classify(r) == RootClass::Lhp)
    }

    /// Groups roots closer than `tol` and returns `(representative, multiplicity)`.
    pub fn clusters(&self, tol: f64) -> Vec<(Complex64, usize)> {
        let mut out: Vec<(Complex64, usize)> = Vec::new();
        for &r in &self.roots {
            match out.iter_mut().find(|(c, _)| (*c - r).norm() <= tol) {
                Some(entry) => entry.1 += 1,
                None => out.push((r, 1)),
            }
        }
        out
    }

    /// Relative coefficient error between `prod (s - r_k)` and the monic form of `p`.
    pub fn residual(&self, p: &Polynomial) -> f64 {
        Polynomial::from_roots(&self.roots, 1.0).rel_distance(&p.monic())
    }
}

/// All complex roots of `p`, from the eigenvalues of the balanced companion
/// matrix followed by a few Newton steps on `p` itself.
pub fn poly_roots(p: &Polynomial) -> Result<RootSet> {
    poly_roots_with_margin(p, ROOT_MARGIN)
}

pub fn poly_roots_with_margin(p: &Polynomial, margin: f64) -> Result<RootSet> {
    if p.degree() == 0 {
        return Err(Error::Degree("root finding needs a polynomial of degree >= 1".into()));
    }
    p.check_degree()?;
    let (zeros, rest) = p.deflate_origin();
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
    if rest.degree() > 0 {
        let monic = rest.monic();
        let n = monic.degree();
        let mut comp = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            comp[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            comp[(i, n - 1)] = -monic.coeff(i);
        }
        balance(&mut comp);
        let dp = rest.derivative();
        for ev in comp.complex_eigenvalues().iter() {
            roots.push(polish(&rest, &dp, Complex64::new(ev.re, ev.im)));
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(RootSet { roots, margin })
}

fn polish(p: &Polynomial, dp: &Polynomial, mut r: Complex64) -> Complex64 {
    let mut best = p.eval(r).norm();
    for _ in 0..6 {
        let d = dp.eval(r);
        if d.norm() == 0.0 {
            break;
        }
        let cand = r - p.eval(r) / d;
        let val = p.eval(cand).norm();
        if val < best && cand.re.is_finite() && cand.im.is_finite() {
            best = val;
            r = cand;
        } else {
            break;
        }
    }
    r
}

/// Parlett-Reinsch diagonal balancing with power-of-two scalings.
fn balance(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    let radix = 2.0f64;
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut cc = c;
            while cc < r / radix {
                cc *= radix;
                f *= radix;
            }
            while cc > r * radix {
                cc /= radix;
                f /= radix;
            }
            let rr = r / f;
            if (cc + rr) < 0.95 * s {
                converged = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// True iff every root of `p` has real part `< -margin`.
///
/// Decided by a Routh array on `p(z - margin)`, independently of
/// [`poly_roots`]. A constant nonzero polynomial has no roots and passes.
pub fn is_hurwitz(p: &Polynomial, margin: f64) -> bool {
    if p.is_zero() {
        return false;
    }
    let q = if margin == 0.0 { p.clone() } else { p.shift(-margin) };
    let n = q.degree();
    if n == 0 {
        return true;
    }
    // Rows of the Routh array, highest power first.
    let c: Vec<f64> = (0..=n).map(|k| q.coeff(n - k)).collect();
    let mut prev: Vec<f64> = c.iter().step_by(2).copied().collect();
    let mut cur: Vec<f64> = c.iter().skip(1).step_by(2).copied().collect();
    let lead_sign = c[0].signum();
    for _ in 0..n {
        let scale = prev.iter().chain(cur.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
        let head = cur.first().copied().unwrap_or(0.0);
        if head.abs() <= 1e-13 * scale || head.signum() != lead_sign {
            return false;
        }
        let mut next = Vec::with_capacity(prev.len());
        for k in 0..prev.len().saturating_sub(1) {
            let a = prev.get(k + 1).copied().unwrap_or(0.0);
            let b = cur.get(k + 1).copied().unwrap_or(0.0);
            next.push((head * a - prev[0] * b) / head);
        }
        if next.is_empty() {
            // Last row reached: all first-column entries had the same sign.
            return true;
        }
        prev = cur;
        cur = next;
    }
    true
}
