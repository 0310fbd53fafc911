use nalgebra::DMatrix;
use num_complex::Complex64;

use super::links::{build_links, LinkAtOmega, LinkMaps};
use super::scenario::ChainScenario;
use crate::error::{Error, Result};

type C = Complex64;

/// Disturbance-to-error response of an `n`-vehicle chain at one frequency.
///
/// Row `k` is the error `e_{k+1}`, column `m` the disturbance `d_m`
/// (column 0 is the leader).
#[derive(Clone, Debug, PartialEq)]
pub struct ChainFreqMatrix {
    pub omega: f64,
    pub entries: DMatrix<C>,
}

impl ChainFreqMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }
}

/// Shift matrix `[0 | I_N]`: each error sees its own vehicle's disturbance.
pub fn own_disturbance_matrix(n: usize) -> DMatrix<C> {
    DMatrix::from_fn(
        n,
        n + 1,
        |k, m| if m == k + 1 { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) },
    )
}

/// Leader column `[1, t, ..., t^{N-1}]^T`, zero elsewhere.
pub fn leader_matrix(n: usize, t: C) -> DMatrix<C> {
    let mut out = DMatrix::zeros(n, n + 1);
    let mut pow = C::new(1.0, 0.0);
    for k in 0..n {
        out[(k, 0)] = pow;
        pow *= t;
    }
    out
}

/// Strictly lower cascade: entry `(k, m) = t^{k-m}` for `1 <= m <= k`.
pub fn cascade_matrix(n: usize, t: C) -> DMatrix<C> {
    let pows = powers(t, n);
    DMatrix::from_fn(n, n + 1, |k, m| {
        if m >= 1 && m <= k {
            pows[k - m]
        } else {
            C::new(0.0, 0.0)
        }
    })
}

fn powers(t: C, n: usize) -> Vec<C> {
    let mut out = Vec::with_capacity(n);
    let mut pow = C::new(1.0, 0.0);
    for _ in 0..n {
        out.push(pow);
        pow *= t;
    }
    out
}

/// Scenario together with its link maps, so sweeps build the maps once.
#[derive(Clone, Debug)]
pub struct ChainModel {
    pub scenario: ChainScenario,
    pub links: LinkMaps,
}

impl ChainModel {
    pub fn new(scenario: ChainScenario) -> Result<Self> {
        let links = build_links(&scenario)?;
        Ok(ChainModel { scenario, links })
    }

    pub fn stable(&self) -> bool {
        self.links.stable()
    }

    pub fn freq_matrix(&self, n: usize, omega: f64) -> Result<ChainFreqMatrix> {
        if n == 0 {
            return Err(Error::Precondition("chain length N must be >= 1".into()));
        }
        let at = self.links.at(omega)?;
        let entries = match &self.links {
            LinkMaps::Scalar(_) => scalar_matrix(&at, n),
            LinkMaps::Block2(_) => block_matrix(&at, n),
        };
        Ok(ChainFreqMatrix { omega, entries })
    }
}

/// `own * A + l * B(t) + p * C(t)` for a scalar link.
fn scalar_matrix(at: &LinkAtOmega, n: usize) -> DMatrix<C> {
    let t = at.t[0][0];
    let l = at.g_prev[0];
    let own = at.g_own[0];
    let p = l + t * own;
    own_disturbance_matrix(n) * own + leader_matrix(n, t) * l + cascade_matrix(n, t) * p
}

/// Direct recursion on the two-state link.
fn block_matrix(at: &LinkAtOmega, n: usize) -> DMatrix<C> {
    // w_j = T^j g_prev, u_j = T^j (g_prev + T g_own).
    let tg_own = at.apply(at.g_own);
    let mut w = at.g_prev;
    let mut u = [at.g_prev[0] + tg_own[0], at.g_prev[1] + tg_own[1]];
    let mut lead = Vec::with_capacity(n);
    let mut cross = Vec::with_capacity(n);
    for _ in 0..n {
        lead.push(w[0]);
        cross.push(u[0]);
        w = at.apply(w);
        u = at.apply(u);
    }
    let own = at.g_own[0];
    DMatrix::from_fn(n, n + 1, |k, m| {
        if m == 0 {
            lead[k]
        } else if m == k + 1 {
            own
        } else if m <= k {
            cross[k - m]
        } else {
            C::new(0.0, 0.0)
        }
    })
}

pub fn chain_freq_matrix(sc: &ChainScenario, n: usize, omega: f64) -> Result<ChainFreqMatrix> {
    ChainModel::new(sc.clone())?.freq_matrix(n, omega)
}
