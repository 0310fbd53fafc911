//! Shared oracles for the integration suites.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use platoon_core::chain::{ChainScenario, Comm, Sensors};
use platoon_core::ratfun::RationalTF;
use platoon_core::Complex64 as C;

pub fn tf(n: &[f64], d: &[f64]) -> RationalTF {
    RationalTF::from_coeffs(n, d).unwrap()
}

/// Chain response from solving every vehicle's equations at once.
///
/// Unknowns per follower are `x_i, e'_i, r_i, v_i`; the leader only has
/// `x_0`. Column `j` is the response to a unit `d_j`, row `i` is `e'_{i+1}`.
pub fn dense_chain_response(sc: &ChainScenario, n: usize, omega: f64) -> DMatrix<C> {
    let s = C::new(0.0, omega);
    let ev = |t: &RationalTF| t.eval_at(s);
    let zero = C::new(0.0, 0.0);
    let one = C::new(1.0, 0.0);
    let k = ev(sc.k());
    // u = K e' + H r, v = F e' + G r, r = W v_{i-1}.
    let (f, g, hc, w) = match sc.comm() {
        Comm::None => (zero, zero, zero, zero),
        Comm::Cacc { b, h, w } => (k / ev(b), ev(h) / ev(b), ev(h), ev(w)),
        Comm::General { f, g, h, w } => (ev(f), ev(g), ev(h), ev(w)),
    };
    // Mount map Kx / (s^2 + Kx) from sensor part to measured position.
    let (mr, mf) = match sc.sensors() {
        Sensors::Identity => (one, one),
        Sensors::Mounts { kr, kf } => {
            let m = |kx: C| kx / (s * s + kx);
            (m(ev(kr)), m(ev(kf)))
        }
    };
    let dim = 1 + 4 * n;
    let xi = |i: usize| if i == 0 { 0 } else { 1 + 4 * (i - 1) };
    let mut a = DMatrix::<C>::zeros(dim, dim);
    a[(0, 0)] = s * s;
    for i in 1..=n {
        let (x, e, r, v) = (xi(i), xi(i) + 1, xi(i) + 2, xi(i) + 3);
        a[(x, x)] = s * s;
        a[(x, e)] = -k;
        a[(x, r)] = -hc;
        a[(e, e)] = one;
        a[(e, xi(i - 1))] -= mr;
        a[(e, x)] += mf + s * sc.h();
        a[(r, r)] = one;
        if i > 1 {
            a[(r, xi(i - 1) + 3)] = -w;
        }
        a[(v, v)] = one;
        a[(v, e)] = -f;
        a[(v, r)] = -g;
    }
    let lu = a.lu();
    DMatrix::from_fn(n, n + 1, |row, col| {
        let mut rhs = DVector::<C>::zeros(dim);
        rhs[xi(col)] = one;
        let sol = lu.solve(&rhs).expect("vehicle equations are singular");
        sol[xi(row + 1) + 1]
    })
}

/// Largest singular value through the Hermitian eigenproblem of `M^H M`.
pub fn dense_sigma_max(m: &DMatrix<C>) -> f64 {
    let g = m.adjoint() * m;
    g.symmetric_eigenvalues().iter().fold(0.0f64, |a, v| a.max(*v)).sqrt()
}
