use std::io::Read;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Horizon, in units of `1/cutoff`, that a lowpass disturbance needs.
pub const LOWPASS_HORIZON_FACTOR: f64 = 50.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DisturbanceKind {
    /// Unit-area pulse in the first step.
    Impulse,
    Sine {
        omega: f64,
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Gaussian noise band-limited to half the cutoff (rad/s), Hann windowed
    /// and scaled to RMS `amplitude`.
    LowpassNoise { cutoff: f64, seed: u64, amplitude: f64 },
    /// Tabulated samples, linearly interpolated, zero outside their range.
    Series { t: Vec<f64>, value: Vec<f64> },
}

/// Which vehicles a disturbance acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TargetRepr", into = "TargetRepr")]
pub enum Target {
    Vehicle(usize),
    All,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TargetRepr {
    Index(usize),
    Name(String),
}

impl TryFrom<TargetRepr> for Target {
    type Error = String;
    fn try_from(r: TargetRepr) -> std::result::Result<Self, String> {
        match r {
            TargetRepr::Index(i) => Ok(Target::Vehicle(i)),
            TargetRepr::Name(s) if s == "all" => Ok(Target::All),
            TargetRepr::Name(s) => Err(format!("target must be a vehicle index or \"all\", got {s:?}")),
        }
    }
}

impl From<Target> for TargetRepr {
    fn from(t: Target) -> Self {
        match t {
            Target::Vehicle(i) => TargetRepr::Index(i),
            Target::All => TargetRepr::Name("all".into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSpec {
    #[serde(flatten)]
    pub kind: DisturbanceKind,
    pub target: Target,
    /// Active window `[0, duration]`; the whole horizon if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
}

impl DisturbanceSpec {
    pub fn new(kind: DisturbanceKind, target: Target) -> Self {
        DisturbanceSpec {
            kind,
            target,
            duration: None,
        }
    }

    pub fn with_duration(mut self, duration: f64) -> Self {
        self.duration = Some(duration);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Precondition(m));
        if let Some(d) = self.duration {
            if !(d > 0.0 && d.is_finite()) {
                return bad(format!("duration must be positive, got {d}"));
            }
        }
        match &self.kind {
            DisturbanceKind::Impulse => Ok(()),
            DisturbanceKind::Sine {
                omega,
                amplitude,
                phase,
            } => {
                if [omega, amplitude, phase].iter().any(|v| !v.is_finite()) || *omega < 0.0 {
                    return bad("sine needs finite omega >= 0, amplitude and phase".into());
                }
                Ok(())
            }
            DisturbanceKind::LowpassNoise { cutoff, amplitude, .. } => {
                if !(*cutoff > 0.0 && cutoff.is_finite()) || !amplitude.is_finite() {
                    return bad(format!("lowpass noise needs cutoff > 0, got {cutoff}"));
                }
                Ok(())
            }
            DisturbanceKind::Series { t, value } => {
                if t.len() != value.len() || t.is_empty() {
                    return bad("series needs equally many t and value entries".into());
                }
                if t.windows(2)
                    .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
                {
                    return bad("series times must be strictly increasing".into());
                }
                if t.iter().chain(value).any(|v| !v.is_finite()) {
                    return bad("series entries must be finite".into());
                }
                Ok(())
            }
        }
    }

    /// Horizon this disturbance needs: lowpass noise asks for `50 / cutoff`.
    pub fn required_horizon(&self, horizon: f64) -> f64 {
        match self.kind {
            DisturbanceKind::LowpassNoise { cutoff, .. } => horizon.max(LOWPASS_HORIZON_FACTOR / cutoff),
            _ => horizon,
        }
    }

    pub fn acts_on(&self, vehicle: usize) -> bool {
        match self.target {
            Target::All => true,
            Target::Vehicle(i) => i == vehicle,
        }
    }
}

/// Reads a disturbance series from CSV with columns `t, value`. Lines
/// starting with `#` and a non-numeric header row are skipped.
pub fn read_series_csv<R: Read>(mut r: R) -> Result<DisturbanceKind> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let (mut t, mut value) = (Vec::new(), Vec::new());
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<(f64, f64)> = match cols.as_slice() {
            [a, b] => a.parse().ok().zip(b.parse().ok()),
            _ => None,
        };
        match parsed {
            Some((a, b)) => {
                t.push(a);
                value.push(b);
            }
            None if t.is_empty() && cols.first().is_some_and(|c| c.parse::<f64>().is_err()) => {}
            None => {
                return Err(Error::Io(format!(
                    "line {}: expected `t,value`, got {line:?}",
                    lineno + 1
                )));
            }
        }
    }
    let kind = DisturbanceKind::Series { t, value };
    DisturbanceSpec::new(kind.clone(), Target::All).validate()?;
    Ok(kind)
}

/// How a sampled series is read between grid points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hold {
    Zero,
    Linear,
}

/// A disturbance sampled at `k dt`, `k = 0..len`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sampled {
    pub dt: f64,
    pub values: Vec<f64>,
    pub hold: Hold,
}

impl Sampled {
    pub fn zeros(dt: f64, len: usize) -> Self {
        Sampled {
            dt,
            values: vec![0.0; len],
            hold: Hold::Linear,
        }
    }

    pub fn get(&self, k: usize) -> f64 {
        self.values.get(k).copied().unwrap_or(0.0)
    }

    /// Value inside step `k` at fraction `frac` of the step.
    #[inline]
    pub fn at(&self, k: usize, frac: f64) -> f64 {
        match self.hold {
            Hold::Zero => self.get(k),
            Hold::Linear => {
                let a = self.get(k);
                if frac == 0.0 {
                    a
                } else {
                    a + (self.get(k + 1) - a) * frac
                }
            }
        }
    }

    pub fn add(&mut self, other: &Sampled) {
        if other.hold == Hold::Zero {
            self.hold = Hold::Zero;
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }
}

fn samples(dt: f64, horizon: f64) -> usize {
    (horizon / dt).round() as usize + 1
}

/// Samples `spec` on the grid `k dt` over `[0, horizon]` (or the longer
/// horizon lowpass noise asks for).
pub fn make_disturbance(spec: &DisturbanceSpec, dt: f64, horizon: f64) -> Sampled {
    make_disturbance_stream(spec, 0, dt, horizon)
}

/// Like [`make_disturbance`]; `stream` offsets the noise seed so that
/// vehicles sharing a spec get independent realizations.
pub fn make_disturbance_stream(spec: &DisturbanceSpec, stream: u64, dt: f64, horizon: f64) -> Sampled {
    let len = samples(dt, spec.required_horizon(horizon));
    let active = spec.duration.map(|d| samples(dt, d).min(len)).unwrap_or(len);
    let mut out = Sampled::zeros(dt, len);
    match &spec.kind {
        DisturbanceKind::Impulse => {
            out.values[0] = 1.0 / dt;
            out.hold = Hold::Zero;
        }
        DisturbanceKind::Sine {
            omega,
            amplitude,
            phase,
        } => {
            for k in 0..active {
                out.values[k] = amplitude * (omega * k as f64 * dt + phase).sin();
            }
        }
        DisturbanceKind::LowpassNoise {
            cutoff,
            seed,
            amplitude,
        } => {
            let noise = lowpass(active, dt, *cutoff, seed.wrapping_add(stream), *amplitude);
            out.values[..active].copy_from_slice(&noise);
        }
        DisturbanceKind::Series { t, value } => {
            for k in 0..active {
                out.values[k] = interp(t, value, k as f64 * dt);
            }
        }
    }
    out
}

fn interp(t: &[f64], v: &[f64], x: f64) -> f64 {
    let (first, last) = (t[0], t[t.len() - 1]);
    if x < first || x > last {
        return 0.0;
    }
    let i = t.partition_point(|&ti| ti <= x);
    if i == 0 {
        return v[0];
    }
    if i >= t.len() {
        return v[t.len() - 1];
    }
    let (t0, t1) = (t[i - 1], t[i]);
    v[i - 1] + (v[i] - v[i - 1]) * (x - t0) / (t1 - t0)
}

fn lowpass(m: usize, dt: f64, cutoff: f64, seed: u64, amplitude: f64) -> Vec<f64> {
    if m < 2 {
        return vec![0.0; m];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf: Vec<Complex<f64>> = (0..m)
        .map(|_| Complex::new(StandardNormal.sample(&mut rng), 0.0))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(m).process(&mut buf);
    let keep = 0.5 * cutoff;
    let bin = 2.0 * std::f64::consts::PI / (m as f64 * dt);
    for (k, z) in buf.iter_mut().enumerate() {
        let w = bin * k.min(m - k) as f64;
        if w > keep {
            *z = Complex::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let mut x: Vec<f64> = buf
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let hann = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * k as f64 / (m - 1) as f64).cos());
            z.re * hann
        })
        .collect();
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / m as f64).sqrt();
    if rms > 0.0 {
        let g = amplitude / rms;
        x.iter_mut().for_each(|v| *v *= g);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn energy(s: &Sampled) -> f64 {
        // Trapezoid rule.
        let v = &s.values;
        let mut e = 0.0;
        for w in v.windows(2) {
            e += 0.5 * (w[0] * w[0] + w[1] * w[1]) * s.dt;
        }
        e
    }

    #[test]
    fn impulse_has_unit_area() {
        let s = make_disturbance(
            &DisturbanceSpec::new(DisturbanceKind::Impulse, Target::Vehicle(0)),
            1e-3,
            1.0,
        );
        assert_eq!(s.values.iter().filter(|v| **v != 0.0).count(), 1);
        assert!((s.values[0] * 1e-3 - 1.0).abs() < 1e-12);
        assert_eq!(s.at(0, 0.75), s.values[0]);
        assert_eq!(s.at(1, 0.0), 0.0);
    }

    #[test]
    fn sine_energy() {
        let spec = DisturbanceSpec::new(
            DisturbanceKind::Sine {
                omega: 1.0,
                amplitude: 1.0,
                phase: 0.0,
            },
            Target::Vehicle(0),
        );
        let s = make_disturbance(&spec, 1e-3, 100.0);
        let want = (50.0 - (200.0f64).sin() / 4.0).sqrt();
        assert!((energy(&s).sqrt() - want).abs() < 1e-4);
        assert!((energy(&s).sqrt() - 50f64.sqrt()).abs() / 50f64.sqrt() < 0.01);
    }

    #[test]
    fn lowpass_is_concentrated_below_cutoff() {
        for (cutoff, dt) in [(1e-2, 0.05), (0.5, 1e-2)] {
            let spec = DisturbanceSpec::new(
                DisturbanceKind::LowpassNoise {
                    cutoff,
                    seed: 7,
                    amplitude: 1.0,
                },
                Target::Vehicle(0),
            );
            let s = make_disturbance(&spec, dt, 1.0);
            assert!(s.values.len() as f64 * dt >= 50.0 / cutoff);
            // Independent DFT check.
            let m = s.values.len();
            let mut buf: Vec<Complex<f64>> = s.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
            FftPlanner::new().plan_fft_forward(m).process(&mut buf);
            let bin = 2.0 * std::f64::consts::PI / (m as f64 * dt);
            let (mut below, mut total) = (0.0, 0.0);
            for (k, z) in buf.iter().enumerate() {
                let e = z.norm_sqr();
                total += e;
                if bin * (k.min(m - k) as f64) <= cutoff {
                    below += e;
                }
            }
            assert!(below / total >= 0.9, "ratio {}", below / total);
            let rms = (s.values.iter().map(|v| v * v).sum::<f64>() / m as f64).sqrt();
            assert!((rms - 1.0).abs() < 1e-9);
            // Seeded: reproducible, distinct streams differ.
            assert_eq!(s, make_disturbance(&spec, dt, 1.0));
            assert_ne!(s, make_disturbance_stream(&spec, 1, dt, 1.0));
        }
    }

    #[test]
    fn duration_truncates() {
        let spec = DisturbanceSpec::new(
            DisturbanceKind::Sine {
                omega: 2.0,
                amplitude: 1.0,
                phase: 0.3,
            },
            Target::All,
        )
        .with_duration(1.0);
        let s = make_disturbance(&spec, 0.01, 5.0);
        assert_eq!(s.values.len(), 501);
        assert!(s.values[..=100].iter().any(|v| *v != 0.0));
        assert!(s.values[101..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn series_csv_and_interpolation() {
        let csv = "# exported\nt,value\n0,0\n1,2\n2,0\n";
        let kind = read_series_csv(csv.as_bytes()).unwrap();
        let s = make_disturbance(&DisturbanceSpec::new(kind, Target::Vehicle(1)), 0.25, 3.0);
        assert_eq!(
            s.values,
            vec![0.0, 0.5, 1.0, 1.5, 2.0, 1.5, 1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
        assert!(read_series_csv("t,value\n0,1\nbad\n".as_bytes()).is_err());
        assert!(read_series_csv("1,0\n0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn target_serde() {
        let spec: DisturbanceSpec = serde_json::from_str(r#"{"type":"impulse","target":"all"}"#).unwrap();
        assert_eq!(spec.target, Target::All);
        let spec: DisturbanceSpec =
            serde_json::from_str(r#"{"type":"sine","omega":1.0,"amplitude":2.0,"target":3}"#).unwrap();
        assert_eq!(spec.target, Target::Vehicle(3));
        assert!(serde_json::from_str::<DisturbanceSpec>(r#"{"type":"impulse","target":"front"}"#).is_err());
        let back: DisturbanceSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }
}
