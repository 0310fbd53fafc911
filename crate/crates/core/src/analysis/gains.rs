use std::collections::BTreeMap;

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::FrequencyGrid;
use crate::chain::{ChainModel, ChainScenario, LinkAtOmega, LinkMaps};
use crate::error::{Error, Result};

type C = Complex64;

const POWER_ITERS: usize = 200;
const POWER_RTOL: f64 = 1e-12;

/// Matrix-free view of the `N x (N+1)` chain response at one frequency.
///
/// Products with the matrix and its adjoint run the link recursion forward
/// and backward, so each costs `O(N)`.
#[derive(Clone, Copy, Debug)]
pub struct ChainOperator {
    pub at: LinkAtOmega,
    pub n: usize,
}

fn adj_apply(at: &LinkAtOmega, v: [C; 2]) -> [C; 2] {
    [
        at.t[0][0].conj() * v[0] + at.t[1][0].conj() * v[1],
        at.t[0][1].conj() * v[0] + at.t[1][1].conj() * v[1],
    ]
}

fn dot_h(a: [C; 2], b: [C; 2]) -> C {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

impl ChainOperator {
    /// `e = G d`, `d` of length `N+1`.
    pub fn apply(&self, d: &[C]) -> Vec<C> {
        let at = &self.at;
        let mut z = [C::new(0.0, 0.0); 2];
        let mut e = Vec::with_capacity(self.n);
        for i in 1..=self.n {
            let tz = at.apply(z);
            z = [
                tz[0] + at.g_prev[0] * d[i - 1] + at.g_own[0] * d[i],
                tz[1] + at.g_prev[1] * d[i - 1] + at.g_own[1] * d[i],
            ];
            e.push(z[0]);
        }
        e
    }

    /// `y = G^H w`, `w` of length `N`.
    pub fn apply_adjoint(&self, w: &[C]) -> Vec<C> {
        let at = &self.at;
        let mut lam = [C::new(0.0, 0.0); 2];
        let mut y = vec![C::new(0.0, 0.0); self.n + 1];
        for i in (1..=self.n).rev() {
            let tl = adj_apply(at, lam);
            lam = [tl[0] + w[i - 1], tl[1]];
            y[i] += dot_h(at.g_own, lam);
            y[i - 1] += dot_h(at.g_prev, lam);
        }
        y
    }

    /// Largest singular value and its right singular vector.
    pub fn top_singular(&self) -> (f64, Vec<C>) {
        power_iteration(|v| self.apply(v), |u| self.apply_adjoint(u), self.n + 1)
    }

    /// Largest entry modulus `max_{k,m} |G_{k,m}|`.
    pub fn max_entry(&self) -> f64 {
        let at = &self.at;
        let n = self.n;
        if at.dim == 1 {
            let t = at.t[0][0].norm();
            let l = at.g_prev[0].norm();
            let own = at.g_own[0].norm();
            let p = (at.g_prev[0] + at.t[0][0] * at.g_own[0]).norm();
            let geo = |k: usize| if k == 0 { 1.0 } else { 1f64.max(t.powi(k as i32)) };
            let mut best = (l * geo(n - 1)).max(own);
            if n >= 2 {
                best = best.max(p * geo(n - 2));
            }
            return best;
        }
        let tg = at.apply(at.g_own);
        let mut w = at.g_prev;
        let mut u = [at.g_prev[0] + tg[0], at.g_prev[1] + tg[1]];
        let mut best = at.g_own[0].norm();
        for k in 0..n {
            best = best.max(w[0].norm());
            if k + 1 < n {
                best = best.max(u[0].norm());
            }
            w = at.apply(w);
            u = at.apply(u);
        }
        best
    }
}

fn norm2(v: &[C]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Power iteration on `G^H G` from a fixed start vector.
///
/// The start vector has unit-modulus entries with phases `2.4 k`; the
/// all-ones vector is avoided because it is a null vector of every chain
/// whose links satisfy `own = -l` (zero headway). Stops after 200 iterations
/// or when the Rayleigh quotient changes by less than `1e-12` relative.
pub fn power_iteration<F, A>(apply: F, adjoint: A, dim: usize) -> (f64, Vec<C>)
where
    F: Fn(&[C]) -> Vec<C>,
    A: Fn(&[C]) -> Vec<C>,
{
    let s = 1.0 / (dim as f64).sqrt();
    let mut v: Vec<C> = (0..dim).map(|k| C::from_polar(s, 2.4 * k as f64)).collect();
    let mut lam = 0.0;
    for _ in 0..POWER_ITERS {
        let u = apply(&v);
        let next = norm2(&u).powi(2);
        let y = adjoint(&u);
        let ny = norm2(&y);
        if ny == 0.0 {
            return (0.0, v);
        }
        v = y.into_iter().map(|z| z / ny).collect();
        let done = (next - lam).abs() <= POWER_RTOL * next;
        lam = next;
        if done {
            break;
        }
    }
    // Rayleigh quotient at the final vector.
    lam = lam.max(norm2(&apply(&v)).powi(2));
    (lam.sqrt(), v)
}

/// Largest singular value of a dense matrix by the same power iteration.
pub fn largest_singular_value(m: &DMatrix<C>) -> f64 {
    let mh = m.adjoint();
    power_iteration(
        |v| (m * nalgebra::DVector::from_column_slice(v)).as_slice().to_vec(),
        |u| (&mh * nalgebra::DVector::from_column_slice(u)).as_slice().to_vec(),
        m.ncols(),
    )
    .0
}

/// Sup over frequency of a chain gain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainPeak {
    pub gain: f64,
    pub omega: f64,
    /// Grid points skipped because they sit on a closed-loop pole.
    pub skipped: usize,
    pub stable: bool,
}

impl GainPeak {
    fn unstable() -> Self {
        GainPeak {
            gain: f64::INFINITY,
            omega: f64::NAN,
            skipped: 0,
            stable: false,
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Precondition("chain length N must be >= 1".into()))
    } else {
        Ok(())
    }
}

fn sweep<F>(model: &ChainModel, n: usize, grid: &FrequencyGrid, f: F) -> Result<GainPeak>
where
    F: Fn(&ChainOperator) -> f64 + Sync,
{
    check_n(n)?;
    grid.validate()?;
    if !model.stable() {
        return Ok(GainPeak::unstable());
    }
    let eval = |w: f64| model.links.at(w).ok().map(|at| f(&ChainOperator { at, n }));
    let peak = grid.maximize(eval);
    if peak.skipped > 0 {
        warn!("skipped {} grid frequencies next to closed-loop poles", peak.skipped);
    }
    let mut out = GainPeak {
        gain: peak.value,
        omega: peak.omega,
        skipped: peak.skipped,
        stable: true,
    };
    // The response is continuous at w = 0 when no link map has a pole there.
    if let Some(v) = eval(0.0) {
        if v > out.gain {
            out.gain = v;
            out.omega = 0.0;
        }
    }
    Ok(out)
}

pub fn def1_gain_model(model: &ChainModel, n: usize, grid: &FrequencyGrid) -> Result<GainPeak> {
    sweep(model, n, grid, |op| op.top_singular().0)
}

pub fn def2_gain_model(model: &ChainModel, n: usize, grid: &FrequencyGrid) -> Result<GainPeak> {
    sweep(model, n, grid, |op| op.max_entry())
}

/// Sup over the grid of the largest singular value of the chain response:
/// the gain from all disturbances jointly to all errors.
pub fn def1_gain(sc: &ChainScenario, n: usize, grid: &FrequencyGrid) -> Result<GainPeak> {
    def1_gain_model(&ChainModel::new(sc.clone())?, n, grid)
}

/// Sup over the grid and all entries of the chain response: the worst
/// gain from one disturbance to one error.
pub fn def2_gain(sc: &ChainScenario, n: usize, grid: &FrequencyGrid) -> Result<GainPeak> {
    def2_gain_model(&ChainModel::new(sc.clone())?, n, grid)
}

/// Triangle-inequality bound on the largest singular value of a scalar
/// chain at one frequency: `|own| + |l| ||B|| + |p| ||C||`.
///
/// `||B||^2 = sum_{k<N} |t|^{2k}` and `||C||` is bounded by the Gershgorin
/// row sum `sum_{j<=N-2} |t|^j` of `C^H C`.
pub fn thm2_bound(sc: &ChainScenario, n: usize, omega: f64) -> Result<f64> {
    check_n(n)?;
    let links = crate::chain::build_links(sc)?;
    thm2_bound_links(&links, n, omega)
}

pub fn thm2_bound_links(links: &LinkMaps, n: usize, omega: f64) -> Result<f64> {
    check_n(n)?;
    let LinkMaps::Scalar(_) = links else {
        return Err(Error::Precondition("the bound needs a scalar link".into()));
    };
    let at = links.at(omega)?;
    let t = at.t[0][0].norm();
    if t > 1.0 + 1e-12 {
        return Err(Error::Precondition(format!("|T(j{omega})| = {t} exceeds 1")));
    }
    let l = at.g_prev[0].norm();
    let own = at.g_own[0].norm();
    let p = (at.g_prev[0] + at.t[0][0] * at.g_own[0]).norm();
    let b_norm = geometric_sum(t * t, n).sqrt();
    let c_norm = if n >= 2 { geometric_sum(t, n - 1) } else { 0.0 };
    Ok(own + l * b_norm + p * c_norm)
}

/// `sum_{k<n} r^k`, evaluated stably near `r = 1`.
fn geometric_sum(r: f64, n: usize) -> f64 {
    if (1.0 - r).abs() < 1e-8 {
        let nf = n as f64;
        // Second-order expansion about r = 1.
        nf + (r - 1.0) * nf * (nf - 1.0) / 2.0
    } else {
        (1.0 - r.powi(n as i32)) / (1.0 - r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthClass {
    Bounded,
    SqrtN,
    Other,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NGains {
    pub def1_gain: f64,
    pub def2_gain: f64,
    pub peak_omega: f64,
    pub def2_peak_omega: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub per_n: BTreeMap<usize, NGains>,
    pub growth_class: GrowthClass,
    /// Constant of the detected law: the largest gain when bounded, the
    /// coefficient of `sqrt(N)` for square-root growth, otherwise the gain
    /// at the largest `N`.
    pub c_estimate: f64,
    pub stable: bool,
}

/// Classifies gain growth from the two largest chain lengths.
pub fn classify_growth(ns: &[usize], gains: &[f64]) -> (GrowthClass, f64) {
    let m = ns.len();
    if m == 0 {
        return (GrowthClass::Other, f64::NAN);
    }
    let last = gains[m - 1];
    if m < 2 || !gains.iter().all(|g| g.is_finite()) {
        return (GrowthClass::Other, last);
    }
    let (n1, n2) = (ns[m - 2] as f64, ns[m - 1] as f64);
    let ratio = last / gains[m - 2];
    let sqrt_ratio = (n2 / n1).sqrt();
    if (0.95..=1.05).contains(&ratio) {
        (GrowthClass::Bounded, gains.iter().copied().fold(0.0, f64::max))
    } else if (0.9..=1.1).contains(&(ratio / sqrt_ratio)) {
        (GrowthClass::SqrtN, last / n2.sqrt())
    } else {
        (GrowthClass::Other, last)
    }
}

/// Joint and single-entry chain gains for each chain length, plus the growth law.
pub fn gain_vs_n_sweep(sc: &ChainScenario, ns: &[usize], grid: &FrequencyGrid) -> Result<GainReport> {
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("chain lengths must be strictly ascending".into()));
    }
    let model = ChainModel::new(sc.clone())?;
    let rows: Vec<Result<(usize, NGains)>> = ns
        .par_iter()
        .map(|&n| {
            let d1 = def1_gain_model(&model, n, grid)?;
            let d2 = def2_gain_model(&model, n, grid)?;
            Ok((
                n,
                NGains {
                    def1_gain: d1.gain,
                    def2_gain: d2.gain,
                    peak_omega: d1.omega,
                    def2_peak_omega: d2.omega,
                },
            ))
        })
        .collect();
    let mut per_n = BTreeMap::new();
    for r in rows {
        let (n, g) = r?;
        per_n.insert(n, g);
    }
    let gains: Vec<f64> = ns.iter().map(|n| per_n[n].def1_gain).collect();
    let (growth_class, c_estimate) = classify_growth(ns, &gains);
    Ok(GainReport {
        per_n,
        growth_class,
        c_estimate,
        stable: model.stable(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::chain_freq_matrix;
    use crate::ratfun::RationalTF;
    use approx::assert_abs_diff_eq;

    fn tf(n: &[f64], d: &[f64]) -> RationalTF {
        RationalTF::from_coeffs(n, d).unwrap()
    }

    fn scenarios() -> Vec<ChainScenario> {
        let pd = tf(&[4.0, 1.0], &[1.0]);
        vec![
            ChainScenario::headway(pd.clone(), 1.0).unwrap(),
            ChainScenario::headway(tf(&[1.0, 2.0, 1.0], &[0.0, 1.0]), 2.0).unwrap(),
            ChainScenario::cacc(
                pd.clone(),
                0.5,
                tf(&[1.0, 0.5], &[1.0, 0.2]),
                tf(&[0.8], &[1.0, 0.3]),
                tf(&[1.0], &[1.0, 0.05]),
            )
            .unwrap(),
            ChainScenario::general(
                pd,
                tf(&[0.3], &[1.0, 2.0]),
                tf(&[0.4], &[1.0, 1.0]),
                tf(&[0.5], &[1.0]),
                tf(&[1.0], &[1.0, 0.1]),
            )
            .unwrap(),
        ]
    }

    #[test]
    fn operator_matches_dense_matrix() {
        for sc in scenarios() {
            let model = ChainModel::new(sc.clone()).unwrap();
            for n in [1, 2, 5] {
                for w in [0.05, 0.7, 3.0] {
                    let g = chain_freq_matrix(&sc, n, w).unwrap().entries;
                    let op = ChainOperator {
                        at: model.links.at(w).unwrap(),
                        n,
                    };
                    let d: Vec<C> = (0..=n).map(|k| C::new(k as f64 - 1.5, 0.3 * k as f64)).collect();
                    let e = op.apply(&d);
                    let dense = &g * nalgebra::DVector::from_vec(d.clone());
                    let wv: Vec<C> = (0..n).map(|k| C::new(0.2, 1.0 - k as f64)).collect();
                    let y = op.apply_adjoint(&wv);
                    let ydense = g.adjoint() * nalgebra::DVector::from_vec(wv.clone());
                    for k in 0..n {
                        assert!((e[k] - dense[k]).norm() < 1e-12);
                    }
                    for k in 0..=n {
                        assert!((y[k] - ydense[k]).norm() < 1e-12);
                    }
                    let max_entry = g.iter().fold(0.0f64, |m, z| m.max(z.norm()));
                    assert_abs_diff_eq!(op.max_entry(), max_entry, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn power_iteration_matches_closed_forms() {
        // N = 1: sigma^2 = sum |g|^2. N = 2: top eigenvalue of the 2x2 Gram matrix G G^H.
        for sc in scenarios() {
            for w in [0.1, 1.0, 2.5] {
                let g1 = chain_freq_matrix(&sc, 1, w).unwrap().entries;
                let s1: f64 = g1.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                assert_abs_diff_eq!(largest_singular_value(&g1), s1, epsilon = 1e-10 * s1);

                let g2 = chain_freq_matrix(&sc, 2, w).unwrap().entries;
                let m = &g2 * g2.adjoint();
                let (a, d) = (m[(0, 0)].re, m[(1, 1)].re);
                let b = m[(0, 1)].norm_sqr();
                let top = 0.5 * (a + d) + (0.25 * (a - d).powi(2) + b).sqrt();
                assert_abs_diff_eq!(largest_singular_value(&g2), top.sqrt(), epsilon = 1e-9 * top.sqrt());
            }
        }
    }

    #[test]
    fn single_link_gain() {
        // K = s+1, h = 0, N = 1: row L [1, -1], |L| peaks at 1/sqrt(0.75).
        let sc = ChainScenario::headway(tf(&[1.0, 1.0], &[1.0]), 0.0).unwrap();
        let g = def1_gain(&sc, 1, &FrequencyGrid::default()).unwrap();
        assert_abs_diff_eq!(g.gain, 2f64.sqrt() / 0.75f64.sqrt(), epsilon = 1e-6);
        assert_abs_diff_eq!(g.omega, 0.5f64.sqrt(), epsilon = 3e-3);
        let g2 = def2_gain(&sc, 1, &FrequencyGrid::default()).unwrap();
        assert!(g2.gain <= g.gain);
    }

    #[test]
    fn unstable_loop_reports_infinite_gain() {
        let sc = ChainScenario::headway(RationalTF::constant(4.0), 0.0).unwrap();
        let g = def1_gain(&sc, 3, &FrequencyGrid::default()).unwrap();
        assert!(g.gain.is_infinite() && !g.stable);
    }

    #[test]
    fn leader_column_bound_at_low_frequency() {
        let sc = ChainScenario::headway(tf(&[4.0, 1.0], &[1.0]), 1.0).unwrap();
        let low = FrequencyGrid::new(1e-6, 1e-3, 16, 2).unwrap();
        for n in [4, 16] {
            let g = def1_gain(&sc, n, &low).unwrap();
            assert!(g.gain >= (n as f64).sqrt() / 4.0 * (1.0 - 1e-9));
        }
    }

    #[test]
    fn def2_grows_geometrically_when_t_exceeds_one() {
        // h = 0: sup|T| > 1, so the leader-to-tail entry grows.
        let sc = ChainScenario::headway(tf(&[1.0, 1.0], &[1.0]), 0.0).unwrap();
        let g = FrequencyGrid::default();
        let a = def2_gain(&sc, 10, &g).unwrap().gain;
        let b = def2_gain(&sc, 20, &g).unwrap().gain;
        let t = crate::analysis::hinf(&tf(&[1.0, 1.0], &[1.0, 1.0, 1.0]), &g)
            .unwrap()
            .peak;
        assert!((b / a).ln() / 10.0 > 0.9 * t.ln());
    }

    #[test]
    fn bound_dominates_singular_value() {
        let sc = ChainScenario::headway(tf(&[1.0, 2.0, 1.0], &[0.0, 1.0]), 2.0).unwrap();
        let model = ChainModel::new(sc.clone()).unwrap();
        for n in [1, 3, 16, 64] {
            for w in FrequencyGrid::new(1e-3, 1e2, 8, 0).unwrap().points() {
                let op = ChainOperator {
                    at: model.links.at(w).unwrap(),
                    n,
                };
                let s = op.top_singular().0;
                let b = thm2_bound(&sc, n, w).unwrap();
                assert!(b >= s * (1.0 - 1e-9), "n={n} w={w}: {b} < {s}");
            }
        }
        let h0 = ChainScenario::headway(tf(&[1.0, 1.0], &[1.0]), 0.0).unwrap();
        assert!(matches!(thm2_bound(&h0, 4, 0.7), Err(Error::Precondition(_))));
    }

    #[test]
    fn pid_low_frequency_ratio() {
        // |L|^2 / (1 - |T|^2) -> 1 / (k_I^2 h^2) with k_I = 1.
        let h = 2.0;
        let sc = ChainScenario::headway(tf(&[1.0, 2.0, 1.0], &[0.0, 1.0]), h).unwrap();
        let links = crate::chain::build_links(&sc).unwrap();
        let at = links.at(1e-4).unwrap();
        let l2 = at.g_prev[0].norm_sqr();
        let t2 = at.t[0][0].norm_sqr();
        assert_abs_diff_eq!(l2 / (1.0 - t2), 1.0 / (h * h), epsilon = 1e-3);
    }

    #[test]
    fn growth_classification() {
        let ns = [8, 16, 32];
        let (c, k) = classify_growth(&ns, &[1.0, 1.01, 1.02]);
        assert_eq!(c, GrowthClass::Bounded);
        assert_abs_diff_eq!(k, 1.02);
        let (c, k) = classify_growth(&ns, &[0.25 * 8f64.sqrt(), 1.0, 0.25 * 32f64.sqrt()]);
        assert_eq!(c, GrowthClass::SqrtN);
        assert_abs_diff_eq!(k, 0.25, epsilon = 1e-12);
        assert_eq!(classify_growth(&ns, &[1.0, 4.0, 16.0]).0, GrowthClass::Other);
    }
}
