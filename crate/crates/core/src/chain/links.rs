use num_complex::Complex64;

use super::scenario::{ChainScenario, Comm, Sensors};
use crate::error::{Error, Result};
use crate::ratfun::{is_hurwitz, Polynomial, RationalTF, ROOT_MARGIN};

/// Per-link maps of a chain whose errors obey a scalar recursion
/// `e_i = t e_{i-1} + l d_{i-1} + own d_i`.
///
/// `p = l + t * own` is the coefficient of `d_{i-1}` in `e_{i+1}`. For the
/// headway link `l = L`, `own = -(1+hs) L` and `p = s^2 / (s^2+(1+hs)K)^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarLink {
    pub t: RationalTF,
    pub l: RationalTF,
    pub p: RationalTF,
    pub own: RationalTF,
    /// Characteristic polynomials whose roots are the link's closed-loop poles.
    pub char_polys: Vec<Polynomial>,
    pub stable: bool,
}

/// Two-state link `z_{i+1} = T z_i + inject d_i + inject_own d_{i+1}`,
/// with `e_i` the first component of `z_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Block2Link {
    pub t11: RationalTF,
    pub t12: RationalTF,
    pub t21: RationalTF,
    pub t22: RationalTF,
    pub inject: [RationalTF; 2],
    pub inject_own: [RationalTF; 2],
    pub trace: RationalTF,
    pub det: RationalTF,
    pub char_polys: Vec<Polynomial>,
    pub stable: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LinkMaps {
    Scalar(ScalarLink),
    Block2(Block2Link),
}

impl LinkMaps {
    pub fn stable(&self) -> bool {
        match self {
            LinkMaps::Scalar(l) => l.stable,
            LinkMaps::Block2(b) => b.stable,
        }
    }

    pub fn char_polys(&self) -> &[Polynomial] {
        match self {
            LinkMaps::Scalar(l) => &l.char_polys,
            LinkMaps::Block2(b) => &b.char_polys,
        }
    }

    pub fn require_stable(&self) -> Result<()> {
        if self.stable() {
            Ok(())
        } else {
            Err(Error::Unstable(
                "a link has closed-loop poles off the open left half plane".into(),
            ))
        }
    }

    /// Numeric link data at `s = j*omega`.
    pub fn at(&self, omega: f64) -> Result<LinkAtOmega> {
        let z = Complex64::new(0.0, 0.0);
        match self {
            LinkMaps::Scalar(l) => Ok(LinkAtOmega {
                dim: 1,
                t: [[l.t.eval(omega)?, z], [z, z]],
                g_prev: [l.l.eval(omega)?, z],
                g_own: [l.own.eval(omega)?, z],
            }),
            LinkMaps::Block2(b) => Ok(LinkAtOmega {
                dim: 2,
                t: [
                    [b.t11.eval(omega)?, b.t12.eval(omega)?],
                    [b.t21.eval(omega)?, b.t22.eval(omega)?],
                ],
                g_prev: [b.inject[0].eval(omega)?, b.inject[1].eval(omega)?],
                g_own: [b.inject_own[0].eval(omega)?, b.inject_own[1].eval(omega)?],
            }),
        }
    }
}

/// Link maps evaluated at one frequency. Scalar links use the top-left entry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkAtOmega {
    pub dim: usize,
    pub t: [[Complex64; 2]; 2],
    pub g_prev: [Complex64; 2],
    pub g_own: [Complex64; 2],
}

impl LinkAtOmega {
    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.t[0][0] * v[0] + self.t[0][1] * v[1],
            self.t[1][0] * v[0] + self.t[1][1] * v[1],
        ]
    }

    pub fn trace(&self) -> Complex64 {
        self.t[0][0] + self.t[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.t[0][0] * self.t[1][1] - self.t[0][1] * self.t[1][0]
    }
}

fn one_plus_hs(h: f64) -> RationalTF {
    RationalTF::polynomial(Polynomial::from_vec(vec![1.0, h])).expect("1+hs")
}

/// `s^2 den(K) + (1+hs) num(K)`, the closed-loop polynomial of a headway link.
fn headway_char_poly(k: &RationalTF, h: f64) -> Polynomial {
    let s2 = Polynomial::monomial(1.0, 2);
    &(&s2 * k.den()) + &(&Polynomial::from_vec(vec![1.0, h]) * k.num())
}

/// `T = K/Q`, `L = 1/Q` with `Q = s^2 + (1+hs)K`.
pub fn build_headway_link(k: &RationalTF, h: f64) -> Result<LinkMaps> {
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::InvalidScenario(format!("h must be >= 0, got {h}")));
    }
    let d = headway_char_poly(k, h);
    let t = RationalTF::new(k.num().clone(), d.clone())?;
    let l = RationalTF::new(k.den().clone(), d.clone())?;
    let own = l.mul(&one_plus_hs(h))?.scale(-1.0);
    let p = RationalTF::new(&Polynomial::monomial(1.0, 2) * &(k.den() * k.den()), &d * &d)?;
    let stable = is_hurwitz(&d, ROOT_MARGIN);
    Ok(LinkMaps::Scalar(ScalarLink {
        t,
        l,
        p,
        own,
        char_polys: vec![d],
        stable,
    }))
}

fn prod(factors: &[&Polynomial]) -> Polynomial {
    factors.iter().fold(Polynomial::one(), |acc, f| &acc * *f)
}

fn ratio(num: Polynomial, den: Polynomial) -> Result<RationalTF> {
    RationalTF::new(num, den)
}

/// Two-state CACC link in `z_i = [e_i; v_{i-1} - v_i]`.
///
/// For `h = 0` the entries are `[K, HW; (K/B)s^2, (HW/B)s^2] / Q`. For
/// `h > 0` the exact map carries the factors `beta = 1 - (1+hs)HW/B` and
/// `1 - HW/B`; it is singular for every `s` and its trace is
/// `(K + (HW/B)s^2) / Q` for every `h`.
pub fn build_cacc_link(k: &RationalTF, b: &RationalTF, hc: &RationalTF, w: &RationalTF, h: f64) -> Result<LinkMaps> {
    if b.dc_gain().is_zero() {
        return Err(Error::InvalidFilter("B(0) must be nonzero".into()));
    }
    let d = headway_char_poly(k, h);
    let (nk, dk) = (k.num(), k.den());
    let (nb, db) = (b.num(), b.den());
    let nhw = hc.num() * w.num();
    let dhw = hc.den() * w.den();
    // alpha = HW/B = na/da
    let na = &nhw * db;
    let da = &dhw * nb;
    let s2 = Polynomial::monomial(1.0, 2);
    let (t11, t12, t21, t22) = if h == 0.0 {
        (
            ratio(nk.clone(), d.clone())?,
            ratio(prod(&[&nhw, dk]), prod(&[&dhw, &d]))?,
            ratio(prod(&[&s2, nk, db]), prod(&[nb, &d]))?,
            ratio(prod(&[&s2, &na, dk]), prod(&[&da, &d]))?,
        )
    } else {
        let c = Polynomial::from_vec(vec![1.0, h]);
        let beta = &da - &(&c * &na);
        let oma = &da - &na;
        let row2 = &prod(&[&oma, &s2, dk]) + &prod(&[&Polynomial::monomial(h, 1), nk, &da]);
        (
            ratio(&beta * nk, &oma * &d)?,
            ratio(prod(&[&beta, &nhw, dk]), prod(&[&oma, &dhw, &d]))?,
            ratio(prod(&[&row2, nk, db]), prod(&[dk, &oma, nb, &d]))?,
            ratio(prod(&[&row2, &nhw, db]), prod(&[&dhw, &oma, nb, &d]))?,
        )
    };
    let trace = ratio(&(nk * &da) + &prod(&[&na, &s2, dk]), &da * &d)?;
    let inj0 = ratio(dk.clone(), d.clone())?;
    let inj1 = ratio(nk * db, nb * &d)?.scale(-1.0);
    let c = one_plus_hs(h);
    let inject_own = [inj0.mul(&c)?.scale(-1.0), inj1.mul(&c)?.scale(-1.0)];
    let char_polys = vec![d, nb.clone(), db.clone(), hc.den().clone(), w.den().clone()];
    let stable = char_polys.iter().all(|p| is_hurwitz(p, ROOT_MARGIN));
    Ok(LinkMaps::Block2(Block2Link {
        t11,
        t12,
        t21,
        t22,
        inject: [inj0, inj1],
        inject_own,
        trace,
        det: RationalTF::zero(),
        char_polys,
        stable,
    }))
}

/// General scalar-communication link (h = 0) in `z_i = [e_i; v_{i-1}]`.
pub fn build_general_link(
    k: &RationalTF,
    f: &RationalTF,
    g: &RationalTF,
    hc: &RationalTF,
    w: &RationalTF,
) -> Result<LinkMaps> {
    let d = headway_char_poly(k, 0.0);
    let (nk, dk) = (k.num(), k.den());
    let (nf, df) = (f.num(), f.den());
    let nhw = hc.num() * w.num();
    let dhw = hc.den() * w.den();
    let ngw = g.num() * w.num();
    let dgw = g.den() * w.den();
    let t11 = ratio(&prod(&[nk, &dhw, df]) - &prod(&[&nhw, nf, dk]), prod(&[&dhw, df, &d]))?;
    let t12 = ratio(prod(&[&nhw, &(&dgw - &ngw), dk]), prod(&[&dhw, &dgw, &d]))?;
    let t21 = f.clone();
    let t22 = ratio(ngw, dgw)?;
    let trace = t11.add(&t22)?;
    // (GK - HF) W / (s^2 + K)
    let (ng, dg) = (g.num(), g.den());
    let (nh, dh) = (hc.num(), hc.den());
    let det = ratio(
        &(&prod(&[ng, nk, dh, df]) - &prod(&[nh, nf, dg, dk])) * w.num(),
        prod(&[dg, dh, df, w.den(), &d]),
    )?;
    let inj0 = ratio(dk.clone(), d.clone())?;
    let inject = [inj0.clone(), RationalTF::zero()];
    let inject_own = [inj0.scale(-1.0), RationalTF::zero()];
    let char_polys = vec![d, df.clone(), g.den().clone(), hc.den().clone(), w.den().clone()];
    let stable = char_polys.iter().all(|p| is_hurwitz(p, ROOT_MARGIN));
    Ok(LinkMaps::Block2(Block2Link {
        t11,
        t12,
        t21,
        t22,
        inject,
        inject_own,
        trace,
        det,
        char_polys,
        stable,
    }))
}

/// Sensor-mount maps. `a` propagates the measured error:
/// `e'_i = a e'_{i-1} + l d_{i-1} + own d_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct SensorLink {
    pub a: RationalTF,
    pub m_r: RationalTF,
    pub m_f: RationalTF,
    pub t_prime: RationalTF,
    pub link: ScalarLink,
}

/// `kx` and `s^2 den(kx) + kx` so that the mount map is their ratio.
fn mount_parts(kx: &RationalTF) -> (Polynomial, Polynomial) {
    let den = &(&Polynomial::monomial(1.0, 2) * kx.den()) + kx.num();
    (kx.num().clone(), den)
}

pub fn build_sensor_link(k: &RationalTF, kr: &RationalTF, kf: &RationalTF) -> Result<SensorLink> {
    if kr.dc_gain().is_zero() || kf.dc_gain().is_zero() {
        return Err(Error::InvalidMount("Kr(0) and Kf(0) must be nonzero".into()));
    }
    let (nr, mr) = mount_parts(kr);
    let (nf, mf) = mount_parts(kf);
    let (nk, dk) = (k.num(), k.den());
    let s2 = Polynomial::monomial(1.0, 2);
    // s^2 + M_f K over M_f's and K's denominators.
    let char_poly = &prod(&[&s2, &mf, dk]) + &(&nf * nk);
    let a = ratio(prod(&[&nr, nk, &mf]), &mr * &char_poly)?;
    let l = ratio(prod(&[&nr, &mf, dk]), &mr * &char_poly)?;
    let own = ratio(&nf * dk, char_poly.clone())?.scale(-1.0);
    let p = ratio(
        prod(&[&nr, &mf, &mf, dk, dk, &s2]),
        prod(&[&mr, &char_poly, &char_poly]),
    )?;
    let t_prime = ratio(&nf * nk, char_poly.clone())?;
    let char_polys = vec![char_poly, mr.clone(), mf.clone(), kr.den().clone(), kf.den().clone()];
    let stable = char_polys.iter().all(|p| is_hurwitz(p, ROOT_MARGIN));
    Ok(SensorLink {
        t_prime,
        link: ScalarLink {
            t: a.clone(),
            l,
            p,
            own,
            char_polys,
            stable,
        },
        a,
        m_r: ratio(nr, mr)?,
        m_f: ratio(nf, mf)?,
    })
}

/// Link maps for any valid scenario.
pub fn build_links(sc: &ChainScenario) -> Result<LinkMaps> {
    match (sc.comm(), sc.sensors()) {
        (Comm::None, Sensors::Identity) => build_headway_link(sc.k(), sc.h()),
        (Comm::Cacc { b, h, w }, _) => build_cacc_link(sc.k(), b, h, w, sc.h()),
        (Comm::General { f, g, h, w }, _) => build_general_link(sc.k(), f, g, h, w),
        (Comm::None, Sensors::Mounts { kr, kf }) => Ok(LinkMaps::Scalar(build_sensor_link(sc.k(), kr, kf)?.link)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tf(n: &[f64], d: &[f64]) -> RationalTF {
        RationalTF::from_coeffs(n, d).unwrap()
    }

    fn scalar(l: LinkMaps) -> ScalarLink {
        match l {
            LinkMaps::Scalar(s) => s,
            _ => panic!("expected scalar link"),
        }
    }

    fn block(l: LinkMaps) -> Block2Link {
        match l {
            LinkMaps::Block2(b) => b,
            _ => panic!("expected block link"),
        }
    }

    #[test]
    fn headway_link_examples() {
        let link = scalar(build_headway_link(&tf(&[4.0, 1.0], &[1.0]), 1.0).unwrap());
        assert!(link.t.equiv(&tf(&[4.0, 1.0], &[4.0, 5.0, 2.0]), 1e-15));
        assert!(link.stable);

        let link = scalar(build_headway_link(&tf(&[1.0, 1.0], &[1.0]), 0.0).unwrap());
        assert!(link.t.equiv(&tf(&[1.0, 1.0], &[1.0, 1.0, 1.0]), 1e-15));
        assert!(link.l.equiv(&tf(&[1.0], &[1.0, 1.0, 1.0]), 1e-15));

        let link = scalar(build_headway_link(&RationalTF::constant(4.0), 0.0).unwrap());
        assert_eq!(link.char_polys[0].coeffs(), &[4.0, 0.0, 1.0]);
        assert!(!link.stable);
    }

    #[test]
    fn headway_link_identities() {
        // T = K L, and p = l + t own, as rational functions.
        for (k, h) in [
            (tf(&[4.0, 1.0], &[1.0]), 1.0),
            (tf(&[1.0, 2.0, 1.0], &[0.0, 1.0]), 0.7),
            (tf(&[3.0, 1.0], &[2.0, 1.0]), 0.0),
        ] {
            let link = scalar(build_headway_link(&k, h).unwrap());
            assert!(link.t.equiv(&k.mul(&link.l).unwrap(), 1e-14));
            let p2 = link.l.add(&link.t.mul(&link.own).unwrap()).unwrap();
            assert!(link.p.equiv(&p2, 1e-13));
        }
    }

    #[test]
    fn cacc_trace_is_one_at_dc_and_det_vanishes() {
        let k = tf(&[2.0, 1.5], &[1.0]);
        let b = tf(&[1.0, 0.5], &[1.0, 0.2]);
        let hc = tf(&[0.8], &[1.0, 0.3]);
        let w = tf(&[1.0], &[1.0, 0.05]);
        for h in [0.0, 0.6] {
            let link = block(build_cacc_link(&k, &b, &hc, &w, h).unwrap());
            assert_abs_diff_eq!(link.trace.eval(0.0).unwrap().re, 1.0, epsilon = 1e-12);
            for &om in &[0.01, 0.3, 1.0, 7.0] {
                let at = LinkMaps::Block2(link.clone()).at(om).unwrap();
                let d = at.det();
                assert!(link.det.is_zero());
                let tr = link.trace.eval(om).unwrap();
                assert!(d.norm() < 1e-9 * (1.0 + tr.norm_sqr()), "det {d} at {om}");
                let num_trace = link.t11.eval(om).unwrap() + link.t22.eval(om).unwrap();
                assert!((num_trace - tr).norm() < 1e-10 * (1.0 + tr.norm()));
            }
        }
    }

    #[test]
    fn cacc_without_comm_reduces_to_headway() {
        let k = tf(&[2.0, 1.5], &[1.0]);
        let zero = RationalTF::zero();
        for h in [0.0, 0.8] {
            let link = block(build_cacc_link(&k, &RationalTF::constant(1.0), &zero, &zero, h).unwrap());
            let head = scalar(build_headway_link(&k, h).unwrap());
            for &om in &[0.1, 1.0, 3.0] {
                let a = link.t11.eval(om).unwrap();
                let b = head.t.eval(om).unwrap();
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn general_link_examples() {
        let k = tf(&[3.0, 2.0], &[1.0]);
        let zero = RationalTF::zero();
        let link = block(build_general_link(&k, &zero, &zero, &zero, &RationalTF::constant(1.0)).unwrap());
        assert!(link.t11.equiv(&tf(&[3.0, 2.0], &[3.0, 2.0, 1.0]), 1e-15));
        assert!(link.t12.is_zero() && link.t21.is_zero() && link.t22.is_zero());

        // G K = H F exactly: g = f = 0.5, h = 1.5 = k(0)... use constants G=H=F, K const.
        let kc = RationalTF::constant(2.0);
        let half = RationalTF::constant(0.5);
        let hc = RationalTF::constant(2.0);
        let link = block(build_general_link(&kc, &half, &half, &hc, &RationalTF::constant(0.9)).unwrap());
        let at = LinkMaps::Block2(link).at(0.7).unwrap();
        assert_abs_diff_eq!(at.det().norm(), 0.0, epsilon = 1e-15);

        // trace(0) = 1 - H(0)W(0)F(0)/K(0) + G(0)W(0).
        let g = tf(&[0.4], &[1.0, 1.0]);
        let w = tf(&[1.0], &[1.0, 0.1]);
        let f = tf(&[0.3], &[1.0, 2.0]);
        let link = block(build_general_link(&k, &f, &g, &half, &w).unwrap());
        assert_abs_diff_eq!(link.trace.eval(0.0).unwrap().re, 1.35, epsilon = 1e-12);
        // det = (GK - HF) W / (s^2 + K)
        let det = g
            .mul(&k)
            .unwrap()
            .sub(&half.mul(&f).unwrap())
            .unwrap()
            .mul(&w)
            .unwrap()
            .div(&k.add(&RationalTF::s().mul(&RationalTF::s()).unwrap()).unwrap())
            .unwrap();
        for &om in &[0.2, 2.0] {
            let at = LinkMaps::Block2(link.clone()).at(om).unwrap();
            assert!((at.det() - det.eval(om).unwrap()).norm() < 1e-12);
            assert!((link.det.eval(om).unwrap() - det.eval(om).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn sensor_link_examples() {
        let k = tf(&[2.0, 1.0], &[1.0]);
        let kr = tf(&[5.0, 2.0], &[1.0]);
        let link = build_sensor_link(&k, &kr, &kr).unwrap();
        for &om in &[0.1, 1.3, 6.0] {
            let a = link.a.eval(om).unwrap();
            let tp = link.t_prime.eval(om).unwrap();
            assert!((a - tp).norm() < 1e-12);
        }

        let kf = tf(&[3.0, 0.5], &[1.0, 0.2]);
        let link = build_sensor_link(&k, &kr, &kf).unwrap();
        assert_abs_diff_eq!(link.a.eval(0.0).unwrap().re, 1.0, epsilon = 1e-12);
        let closed_form = link
            .m_r
            .mul(&link.m_f.recip().unwrap())
            .unwrap()
            .mul(&link.t_prime)
            .unwrap();
        for &om in &[0.05, 0.9, 4.0] {
            let a = link.a.eval(om).unwrap();
            assert!((a - closed_form.eval(om).unwrap()).norm() < 1e-10 * (1.0 + a.norm()));
        }

        // Stiff mounts: M -> 1 and A -> K/(s^2+K).
        let stiff = RationalTF::constant(1e8);
        let link = build_sensor_link(&k, &stiff, &stiff).unwrap();
        let t = tf(&[2.0, 1.0], &[2.0, 1.0, 1.0]);
        for &om in &[0.2, 1.0, 3.0] {
            assert!((link.m_r.eval(om).unwrap() - 1.0).norm() < 1e-6);
            assert!((link.a.eval(om).unwrap() - t.eval(om).unwrap()).norm() < 1e-6);
        }

        assert!(matches!(
            build_sensor_link(&k, &tf(&[0.0, 1.0], &[1.0]), &kr),
            Err(Error::InvalidMount(_))
        ));
    }
}
