use indexmap::IndexMap;
use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::disturbance::{make_disturbance_stream, DisturbanceSpec, Sampled, Target};
use super::realize::{realize, StateSpace};
use crate::chain::{build_links, ChainScenario, Comm, Sensors};
use crate::error::{Error, Result};
use crate::ratfun::{poly_roots, Polynomial, RationalTF};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 200.0;
/// Horizon used instead of the requested one when the loop is unstable.
pub const UNSTABLE_HORIZON_CAP: f64 = 20.0;
/// `dt |p_max|` must stay below this.
pub const STEP_POLE_BOUND: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RecordSet {
    #[default]
    All,
    /// Only chain errors and disturbances; enough for gain estimates.
    ErrorsAndDisturbances,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOptions {
    /// Keep every k-th sample.
    pub record_every: usize,
    pub record: RecordSet,
    /// Sample `W` from the +-10% coefficient family with this seed.
    pub w_jitter: Option<u64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            record_every: 1,
            record: RecordSet::All,
            w_jitter: None,
        }
    }
}

/// Sampled signals of one run, keyed `x0`, `e1`, `u1`, ... in vehicle order.
///
/// `e{i}` is the configuration error `x_{i-1} - x_i - h dx_i/dt`. With sensor
/// mounts the measured error `ep{i}` is recorded too, and that is the
/// chain error the frequency analysis describes.
#[derive(Clone, Debug, PartialEq)]
pub struct SimTrace {
    pub dt: f64,
    pub horizon: f64,
    pub n: usize,
    pub t: Vec<f64>,
    pub signals: IndexMap<String, Vec<f64>>,
    pub error_prefix: &'static str,
    pub warnings: Vec<String>,
}

impl SimTrace {
    pub fn signal(&self, name: &str) -> Option<&[f64]> {
        self.signals.get(name).map(Vec::as_slice)
    }

    /// Chain error of vehicle `i` (`1..=n`).
    pub fn error(&self, i: usize) -> Option<&[f64]> {
        self.signal(&format!("{}{i}", self.error_prefix))
    }

    pub fn disturbance(&self, i: usize) -> Option<&[f64]> {
        self.signal(&format!("d{i}"))
    }

    /// Record spacing in seconds.
    pub fn sample_dt(&self) -> f64 {
        if self.t.len() > 1 {
            self.t[1] - self.t[0]
        } else {
            self.dt
        }
    }
}

fn perturb(p: &Polynomial, rng: &mut ChaCha8Rng) -> Result<Polynomial> {
    Polynomial::new(
        p.coeffs()
            .iter()
            .map(|c| c * (1.0 + rng.random_range(-0.1..0.1)))
            .collect::<Vec<_>>(),
    )
}

fn jitter(w: &RationalTF, seed: u64) -> Result<RationalTF> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..64 {
        let cand = RationalTF::new(perturb(w.num(), &mut rng)?, perturb(w.den(), &mut rng)?)?;
        if cand.is_stable() {
            return Ok(cand);
        }
    }
    Err(Error::InvalidFilter("no stable W found in the perturbed family".into()))
}

enum Message {
    None,
    /// `v = u / B`.
    Cacc(StateSpace),
    /// `v = F e' + G r`.
    General(StateSpace, StateSpace),
}

struct Follower {
    h: f64,
    k: StateSpace,
    hc: Option<StateSpace>,
    w: Option<StateSpace>,
    msg: Message,
    mounts: Option<(StateSpace, StateSpace)>,
    // Offsets of each block inside a follower's state slice.
    o_k: usize,
    o_h: usize,
    o_w: usize,
    o_m1: usize,
    o_m2: usize,
    o_r: usize,
    o_f: usize,
    size: usize,
}

/// Per-vehicle outputs at one instant.
#[derive(Clone, Copy, Default)]
struct Out {
    e: f64,
    ep: f64,
    u: f64,
    r: f64,
    v: f64,
}

fn strictly(name: &str, ss: &StateSpace) -> Result<()> {
    if ss.e != 0.0 {
        return Err(Error::ImproperTf(format!("{name} must be proper for simulation")));
    }
    Ok(())
}

impl Follower {
    fn new(sc: &ChainScenario, w_jitter: Option<u64>) -> Result<Self> {
        let k = realize(sc.k())?;
        let (mut hc, mut w, mut msg) = (None, None, Message::None);
        match sc.comm() {
            Comm::None => {}
            Comm::Cacc { b, h, w: wt } => {
                let binv = realize(&b.recip()?)?;
                strictly("1/B", &binv)?;
                hc = Some(realize(h)?);
                let wt = match w_jitter {
                    Some(seed) => jitter(wt, seed)?,
                    None => wt.clone(),
                };
                w = Some(realize(&wt)?);
                msg = Message::Cacc(binv);
            }
            Comm::General { f, g, h, w: wt } => {
                hc = Some(realize(h)?);
                let wt = match w_jitter {
                    Some(seed) => jitter(wt, seed)?,
                    None => wt.clone(),
                };
                w = Some(realize(&wt)?);
                msg = Message::General(realize(f)?, realize(g)?);
            }
        }
        if let (Some(hb), Some(wb)) = (&hc, &w) {
            if hb.e != 0.0 && wb.d != 0.0 {
                return Err(Error::ImproperTf(
                    "an improper H needs a strictly proper W for simulation".into(),
                ));
            }
        }
        let mounts = match sc.sensors() {
            Sensors::Identity => None,
            Sensors::Mounts { kr, kf } => {
                let part = |kx: &RationalTF| -> Result<StateSpace> {
                    let den = &(&Polynomial::monomial(1.0, 2) * kx.den()) + kx.num();
                    let ss = realize(&RationalTF::new(kx.num().clone(), den)?)?;
                    if ss.e != 0.0 || ss.d != 0.0 {
                        return Err(Error::ImproperTf("mount maps must be strictly proper".into()));
                    }
                    Ok(ss)
                };
                Some((part(kr)?, part(kf)?))
            }
        };
        let order = |s: &Option<StateSpace>| s.as_ref().map_or(0, StateSpace::order);
        let o_k = 2;
        let o_h = o_k + k.order();
        let o_w = o_h + order(&hc);
        let o_m1 = o_w + order(&w);
        let (m1, m2) = match &msg {
            Message::None => (0, 0),
            Message::Cacc(b) => (b.order(), 0),
            Message::General(f, g) => (f.order(), g.order()),
        };
        let o_m2 = o_m1 + m1;
        let o_r = o_m2 + m2;
        let o_f = o_r + mounts.as_ref().map_or(0, |m| m.0.order());
        let size = o_f + mounts.as_ref().map_or(0, |m| m.1.order());
        Ok(Follower {
            h: sc.h(),
            k,
            hc,
            w,
            msg,
            mounts,
            o_k,
            o_h,
            o_w,
            o_m1,
            o_m2,
            o_r,
            o_f,
            size,
        })
    }

    fn fastest_pole(&self) -> f64 {
        let mut m = self.k.fastest_pole();
        for s in [&self.hc, &self.w].into_iter().flatten() {
            m = m.max(s.fastest_pole());
        }
        match &self.msg {
            Message::None => {}
            Message::Cacc(b) => m = m.max(b.fastest_pole()),
            Message::General(f, g) => m = m.max(f.fastest_pole()).max(g.fastest_pole()),
        }
        if let Some((a, b)) = &self.mounts {
            m = m.max(a.fastest_pole()).max(b.fastest_pole());
        }
        m
    }

    /// Evaluates one follower. `prev = (x, dx/dt, v)` of the vehicle ahead.
    #[inline]
    fn eval(&self, y: &[f64], prev: (f64, f64, f64), d: f64, dy: &mut [f64]) -> Out {
        let (xp, xdp, vp) = prev;
        let (x, xd) = (y[0], y[1]);
        let h = self.h;
        let (ep, ep_rate_known, e) = match &self.mounts {
            None => (xp - x - h * xd, xdp - xd, xp - x - h * xd),
            Some((mr, mf)) => {
                let (yr, yf) = (&y[self.o_r..self.o_f], &y[self.o_f..self.size]);
                (
                    mr.state_output(yr) - mf.state_output(yf),
                    mr.state_output_rate(yr, xp) - mf.state_output_rate(yf, x),
                    xp - x,
                )
            }
        };
        let (r, r_rate) = match &self.w {
            Some(w) => {
                let yw = &y[self.o_w..self.o_m1];
                (w.state_output(yw) + w.d * vp, w.state_output_rate(yw, vp))
            }
            None => (0.0, 0.0),
        };
        let h_out = match &self.hc {
            Some(hc) => hc.state_output(&y[self.o_h..self.o_w]) + hc.d * r + hc.e * r_rate,
            None => 0.0,
        };
        // The derivative tap sees -h d^2x/dt^2 = -h (u + d): solve for u.
        let k = &self.k;
        let yk = &y[self.o_k..self.o_h];
        let u = (k.state_output(yk) + k.d * ep + k.e * (ep_rate_known - h * d) + h_out) / (1.0 + k.e * h);
        let xdd = u + d;
        let ep_rate = ep_rate_known - h * xdd;
        let v = match &self.msg {
            Message::None => 0.0,
            Message::Cacc(b) => b.state_output(&y[self.o_m1..self.o_m2]) + b.d * u,
            Message::General(f, g) => {
                f.state_output(&y[self.o_m1..self.o_m2])
                    + f.d * ep
                    + f.e * ep_rate
                    + g.state_output(&y[self.o_m2..self.o_r])
                    + g.d * r
            }
        };
        dy[0] = xd;
        dy[1] = xdd;
        k.deriv(yk, ep, &mut dy[self.o_k..self.o_h]);
        if let Some(hc) = &self.hc {
            hc.deriv(&y[self.o_h..self.o_w], r, &mut dy[self.o_h..self.o_w]);
        }
        if let Some(w) = &self.w {
            w.deriv(&y[self.o_w..self.o_m1], vp, &mut dy[self.o_w..self.o_m1]);
        }
        match &self.msg {
            Message::None => {}
            Message::Cacc(b) => b.deriv(&y[self.o_m1..self.o_m2], u, &mut dy[self.o_m1..self.o_m2]),
            Message::General(f, g) => {
                f.deriv(&y[self.o_m1..self.o_m2], ep, &mut dy[self.o_m1..self.o_m2]);
                g.deriv(&y[self.o_m2..self.o_r], r, &mut dy[self.o_m2..self.o_r]);
            }
        }
        if let Some((mr, mf)) = &self.mounts {
            mr.deriv(&y[self.o_r..self.o_f], xp, &mut dy[self.o_r..self.o_f]);
            mf.deriv(&y[self.o_f..self.size], x, &mut dy[self.o_f..self.size]);
        }
        Out { e, ep, u, r, v }
    }
}

struct Chain {
    n: usize,
    f: Follower,
    d: Vec<Option<Sampled>>,
}

impl Chain {
    fn offset(&self, i: usize) -> usize {
        2 + (i - 1) * self.f.size
    }

    fn len(&self) -> usize {
        2 + self.n * self.f.size
    }

    fn dist(&self, i: usize, k: usize, frac: f64) -> f64 {
        self.d[i].as_ref().map_or(0.0, |s| s.at(k, frac))
    }

    /// Leader-to-tail pass at step `k` + `frac`.
    fn rhs(&self, k: usize, frac: f64, y: &[f64], dy: &mut [f64], mut outs: Option<&mut [Out]>) {
        dy[0] = y[1];
        dy[1] = self.dist(0, k, frac);
        let mut prev = (y[0], y[1], 0.0);
        for i in 1..=self.n {
            let a = self.offset(i);
            let b = a + self.f.size;
            let d = self.dist(i, k, frac);
            let o = self.f.eval(&y[a..b], prev, d, &mut dy[a..b]);
            prev = (y[a], y[a + 1], o.v);
            if let Some(outs) = outs.as_deref_mut() {
                outs[i] = o;
            }
        }
    }
}

fn link_fastest_pole(sc: &ChainScenario) -> Result<(f64, bool)> {
    let links = build_links(sc)?;
    let mut m = 0.0f64;
    for p in links.char_polys() {
        if p.degree() > 0 {
            for r in poly_roots(p)?.roots {
                m = m.max(r.norm());
            }
        }
    }
    Ok((m, links.stable()))
}

/// [`simulate_chain_with`] with default options.
pub fn simulate_chain(sc: &ChainScenario, n: usize, d: &[DisturbanceSpec], dt: f64, horizon: f64) -> Result<SimTrace> {
    simulate_chain_with(sc, n, d, dt, horizon, &SimOptions::default())
}

/// Fixed-step RK4 simulation of vehicles `0..=n` from rest.
pub fn simulate_chain_with(
    sc: &ChainScenario,
    n: usize,
    d: &[DisturbanceSpec],
    dt: f64,
    horizon: f64,
    opts: &SimOptions,
) -> Result<SimTrace> {
    if n == 0 {
        return Err(Error::Precondition("chain length N must be >= 1".into()));
    }
    if !(dt > 0.0 && dt < horizon && horizon.is_finite()) {
        return Err(Error::Precondition(format!(
            "need 0 < dt < horizon, got dt = {dt}, horizon = {horizon}"
        )));
    }
    if opts.record_every == 0 {
        return Err(Error::Precondition("record_every must be >= 1".into()));
    }
    for spec in d {
        spec.validate()?;
        if let Target::Vehicle(i) = spec.target {
            if i > n {
                return Err(Error::Precondition(format!(
                    "disturbance targets vehicle {i} but N = {n}"
                )));
            }
        }
    }
    let f = Follower::new(sc, opts.w_jitter)?;
    let (link_pole, stable) = link_fastest_pole(sc)?;
    let fastest = link_pole.max(f.fastest_pole());
    if fastest > 0.0 && dt > STEP_POLE_BOUND / fastest {
        return Err(Error::StepTooLarge {
            dt,
            max_dt: STEP_POLE_BOUND / fastest,
        });
    }
    let mut warnings = Vec::new();
    let mut horizon = d.iter().fold(horizon, |h, s| s.required_horizon(h));
    if !stable {
        let msg = format!("closed loop is unstable; horizon capped at {UNSTABLE_HORIZON_CAP} s");
        warn!("{msg}");
        warnings.push(msg);
        horizon = horizon.min(UNSTABLE_HORIZON_CAP);
    }
    let steps = (horizon / dt).round() as usize;
    let mut dist: Vec<Option<Sampled>> = vec![None; n + 1];
    for spec in d {
        for (i, slot) in dist.iter_mut().enumerate() {
            if !spec.acts_on(i) {
                continue;
            }
            let stream = if spec.target == Target::All { i as u64 } else { 0 };
            let mut s = make_disturbance_stream(spec, stream, dt, horizon);
            s.values.resize(steps + 1, 0.0);
            match slot {
                Some(acc) => acc.add(&s),
                None => *slot = Some(s),
            }
        }
    }
    let chain = Chain { n, f, d: dist };
    let mounts = matches!(sc.sensors(), Sensors::Mounts { .. });
    let all = opts.record == RecordSet::All;

    let mut names: Vec<String> = Vec::new();
    for i in 0..=n {
        if all {
            names.push(format!("x{i}"));
        }
        if i > 0 {
            if all || !mounts {
                names.push(format!("e{i}"));
            }
            if mounts {
                names.push(format!("ep{i}"));
            }
        }
        if all {
            names.push(format!("u{i}"));
            if i > 0 {
                names.push(format!("r{i}"));
            }
            names.push(format!("v{i}"));
        }
        names.push(format!("d{i}"));
    }
    let cap = steps / opts.record_every + 1;
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(cap); names.len()];
    let mut t = Vec::with_capacity(cap);

    let len = chain.len();
    let mut y = vec![0.0; len];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; len],
        vec![0.0; len],
        vec![0.0; len],
        vec![0.0; len],
        vec![0.0; len],
    );
    let mut outs = vec![Out::default(); n + 1];

    let record = |k: usize, y: &[f64], outs: &[Out], t: &mut Vec<f64>, cols: &mut [Vec<f64>]| {
        t.push(k as f64 * dt);
        let mut c = 0;
        let mut push = |v: f64| {
            cols[c].push(v);
            c += 1;
        };
        for i in 0..=n {
            let x = if i == 0 { y[0] } else { y[chain.offset(i)] };
            let o = outs[i];
            if all {
                push(x);
            }
            if i > 0 {
                if all || !mounts {
                    push(o.e);
                }
                if mounts {
                    push(o.ep);
                }
            }
            if all {
                push(o.u);
                if i > 0 {
                    push(o.r);
                }
                push(o.v);
            }
            push(chain.dist(i, k, 0.0));
        }
    };

    for k in 0..=steps {
        chain.rhs(k, 0.0, &y, &mut k1, Some(&mut outs));
        if k % opts.record_every == 0 {
            record(k, &y, &outs, &mut t, &mut cols);
        }
        if k == steps {
            break;
        }
        for j in 0..len {
            tmp[j] = y[j] + 0.5 * dt * k1[j];
        }
        chain.rhs(k, 0.5, &tmp, &mut k2, None);
        for j in 0..len {
            tmp[j] = y[j] + 0.5 * dt * k2[j];
        }
        chain.rhs(k, 0.5, &tmp, &mut k3, None);
        for j in 0..len {
            tmp[j] = y[j] + dt * k3[j];
        }
        chain.rhs(k, 1.0, &tmp, &mut k4, None);
        for j in 0..len {
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if !y.iter().all(|v| v.is_finite()) {
            let msg = format!("state diverged at t = {}", (k + 1) as f64 * dt);
            warn!("{msg}");
            warnings.push(msg);
            break;
        }
    }
    Ok(SimTrace {
        dt,
        horizon,
        n,
        t,
        signals: names.into_iter().zip(cols).collect(),
        error_prefix: if mounts { "ep" } else { "e" },
        warnings,
    })
}
