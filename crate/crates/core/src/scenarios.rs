//! Canonical scenarios and seeded random families used by the demos and
//! the test suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{cancellation_audit, headway_min_b, FrequencyGrid};
use crate::chain::{build_links, ChainScenario};
use crate::ratfun::{is_hurwitz, Polynomial, RationalTF, ROOT_MARGIN};

fn tf(n: &[f64], d: &[f64]) -> RationalTF {
    RationalTF::from_coeffs(n, d).expect("constant coefficients")
}

/// `K = s + 4`.
pub fn pd_controller() -> RationalTF {
    tf(&[4.0, 1.0], &[1.0])
}

/// `K = (s^2 + 2s + 1) / s`.
pub fn pid_controller() -> RationalTF {
    tf(&[1.0, 2.0, 1.0], &[0.0, 1.0])
}

/// `K = s + 4`, `h = 1`.
pub fn pd_headway() -> ChainScenario {
    ChainScenario::headway(pd_controller(), 1.0).expect("valid")
}

/// The PID controller with `h` at `factor` times its minimal headway.
pub fn pid_headway(factor: f64) -> ChainScenario {
    let k = pid_controller();
    let h = headway_min_b(&k, &FrequencyGrid::default()).expect("PID headway").h_min;
    ChainScenario::headway(k, factor * h).expect("valid")
}

/// CACC without headway: `B = (1 + 0.3s)/(1 + 0.5s)`, `H = 0.5/(1+s)`,
/// `W = 1/(1 + 0.2s)`.
pub fn cacc_demo() -> ChainScenario {
    ChainScenario::cacc(
        tf(&[2.0, 1.0], &[1.0]),
        0.0,
        tf(&[1.0, 0.3], &[1.0, 0.5]),
        tf(&[0.5], &[1.0, 1.0]),
        tf(&[1.0], &[1.0, 0.2]),
    )
    .expect("valid")
}

pub fn general_demo() -> ChainScenario {
    ChainScenario::general(
        tf(&[1.0, 1.0], &[1.0]),
        tf(&[0.2], &[1.0, 1.0]),
        tf(&[0.5], &[1.0, 2.0]),
        tf(&[0.3], &[1.0, 1.0]),
        tf(&[1.0], &[1.0, 0.5]),
    )
    .expect("valid")
}

/// PD controller on compliant spring-damper sensor mounts.
pub fn mounts_demo() -> ChainScenario {
    ChainScenario::mounts(
        tf(&[1.0, 1.0], &[1.0]),
        tf(&[20.0, 4.0], &[1.0]),
        tf(&[30.0, 5.0], &[1.0]),
    )
    .expect("valid")
}

/// Stable scenarios whose chain gain peaks away from `w = 0`, one per
/// structure, for time-domain cross-checks.
pub fn resonant_set() -> Vec<(&'static str, ChainScenario)> {
    vec![
        (
            "pd",
            ChainScenario::headway(tf(&[1.0, 1.0], &[1.0]), 0.0).expect("valid"),
        ),
        (
            "pd_short_headway",
            ChainScenario::headway(pd_controller(), 0.3).expect("valid"),
        ),
        ("cacc", cacc_demo()),
        ("general", general_demo()),
        ("mounts", mounts_demo()),
    ]
}

/// Seeded sampler for the random families. Every draw is stable and
/// passes the cancellation audit.
pub struct ScenarioSampler {
    rng: ChaCha8Rng,
}

/// Draws rejected before giving up; far above what the families need.
const MAX_DRAWS: usize = 10_000;

impl ScenarioSampler {
    pub fn new(seed: u64) -> Self {
        ScenarioSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn u(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    fn lag(&mut self, gain: (f64, f64), tau: (f64, f64)) -> RationalTF {
        let g = self.u(gain.0, gain.1);
        let t = self.u(tau.0, tau.1);
        tf(&[g], &[1.0, t])
    }

    /// `K = b s + a` with `a, b > 0`; `s^2 + K` is always Hurwitz.
    pub fn pd(&mut self) -> RationalTF {
        let a = self.u(0.2, 5.0);
        let b = self.u(0.2, 3.0);
        tf(&[a, b], &[1.0])
    }

    /// A controller that stabilizes `1/s^2` with `h = 0`: PD, lead-lag PD
    /// `(b s + a)/(tau s + 1)` or PID, chosen at random.
    pub fn stabilizing_controller(&mut self) -> RationalTF {
        loop {
            let k = match self.rng.random_range(0..3) {
                0 => self.pd(),
                1 => {
                    let (a, b, t) = (self.u(0.2, 5.0), self.u(0.2, 3.0), self.u(0.01, 0.5));
                    tf(&[a, b], &[1.0, t])
                }
                _ => {
                    let (ki, kp, kd) = (self.u(0.05, 2.0), self.u(0.2, 4.0), self.u(0.2, 3.0));
                    tf(&[ki, kp, kd], &[0.0, 1.0])
                }
            };
            let char_poly = &(&Polynomial::monomial(1.0, 2) * k.den()) + k.num();
            if is_hurwitz(&char_poly, ROOT_MARGIN) {
                return k;
            }
        }
    }

    fn accept(&self, sc: &ChainScenario) -> bool {
        build_links(sc).is_ok_and(|l| l.stable()) && cancellation_audit(sc, &FrequencyGrid::default()).is_empty()
    }

    fn draw<F: FnMut(&mut Self) -> Option<ChainScenario>>(&mut self, mut f: F) -> ChainScenario {
        for _ in 0..MAX_DRAWS {
            if let Some(sc) = f(self) {
                if self.accept(&sc) {
                    return sc;
                }
            }
        }
        panic!("random scenario family produced no admissible draw");
    }

    /// CACC with `h = 0`, biproper `B`, first-order `H` and `W`.
    pub fn cacc(&mut self) -> ChainScenario {
        self.draw(|s| {
            let k = s.pd();
            let (b0, b1, b2) = (s.u(0.5, 2.0), s.u(0.05, 1.0), s.u(0.05, 1.0));
            let b = tf(&[b0, b0 * b1], &[1.0, b2]);
            let h = s.lag((0.2, 2.0), (0.1, 2.0));
            let w = tf(&[1.0], &[1.0, s.u(0.05, 0.5)]);
            ChainScenario::cacc(k, 0.0, b, h, w).ok()
        })
    }

    /// General communication with first-order bounded `F, G, H, W`.
    pub fn general(&mut self) -> ChainScenario {
        self.draw(|s| {
            let k = s.pd();
            let f = s.lag((-1.0, 1.0), (0.1, 2.0));
            let g = s.lag((0.1, 1.5), (0.1, 2.0));
            let h = s.lag((0.1, 1.5), (0.1, 2.0));
            let w = s.lag((0.5, 1.5), (0.05, 1.0));
            ChainScenario::general(k, f, g, h, w).ok()
        })
    }

    /// Spring-damper mounts `Kx = c s + k` under a PD controller.
    pub fn mounts(&mut self) -> ChainScenario {
        self.draw(|s| {
            let k = s.pd();
            let kr = tf(&[s.u(2.0, 50.0), s.u(0.5, 8.0)], &[1.0]);
            let kf = tf(&[s.u(2.0, 50.0), s.u(0.5, 8.0)], &[1.0]);
            ChainScenario::mounts(k, kr, kf).ok()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Variant;

    #[test]
    fn canonical_scenarios_are_stable() {
        for (_, sc) in resonant_set() {
            assert!(build_links(&sc).unwrap().stable());
        }
        assert!(build_links(&pd_headway()).unwrap().stable());
        assert!(build_links(&pid_headway(1.1)).unwrap().stable());
    }

    #[test]
    fn sampler_is_deterministic() {
        let mut a = ScenarioSampler::new(5);
        let mut b = ScenarioSampler::new(5);
        for _ in 0..5 {
            assert_eq!(a.cacc(), b.cacc());
            assert_eq!(a.mounts(), b.mounts());
        }
        assert_eq!(ScenarioSampler::new(1).general().variant(), Variant::General);
        assert_ne!(ScenarioSampler::new(1).general(), ScenarioSampler::new(2).general());
    }
}
