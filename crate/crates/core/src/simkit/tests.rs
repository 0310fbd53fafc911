use num_complex::Complex64;
use rustfft::FftPlanner;

use super::*;
use crate::analysis::{def1_gain, ChainOperator, FrequencyGrid};
use crate::chain::{build_links, ChainScenario};
use crate::error::Error;
use crate::ratfun::RationalTF;

fn tf(n: &[f64], d: &[f64]) -> RationalTF {
    RationalTF::from_coeffs(n, d).unwrap()
}

fn pd(h: f64) -> ChainScenario {
    ChainScenario::headway(tf(&[1.0, 1.0], &[1.0]), h).unwrap()
}

fn impulse(i: usize) -> DisturbanceSpec {
    DisturbanceSpec::new(DisturbanceKind::Impulse, Target::Vehicle(i))
}

fn sine(i: usize, omega: f64, amplitude: f64, phase: f64) -> DisturbanceSpec {
    DisturbanceSpec::new(
        DisturbanceKind::Sine {
            omega,
            amplitude,
            phase,
        },
        Target::Vehicle(i),
    )
}

#[test]
fn zero_input_gives_zero_trace() {
    let tr = simulate_chain(&pd(0.5), 3, &[], 1e-2, 5.0).unwrap();
    assert_eq!(tr.t.len(), 501);
    assert!(tr.signals.values().all(|v| v.iter().all(|x| *x == 0.0)));
    assert_eq!(trace_l2_norms(&tr).gain(), 0.0);
}

#[test]
fn impulse_spectrum_matches_leader_map() {
    // h = 0, K = s + 1: e_1 = d_0 / (s^2 + s + 1), resonant at sqrt(1/2).
    let sc = pd(0.0);
    let dt = 1e-3;
    let tr = simulate_chain(&sc, 1, &[impulse(0)], dt, 60.0).unwrap();
    let e = tr.error(1).unwrap();
    let m = e.len();
    let mut buf: Vec<rustfft::num_complex::Complex<f64>> = e
        .iter()
        .map(|&v| rustfft::num_complex::Complex::new(v * dt, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let bin = 2.0 * std::f64::consts::PI / (m as f64 * dt);
    let l = match build_links(&sc).unwrap() {
        crate::chain::LinkMaps::Scalar(s) => s.l,
        _ => unreachable!(),
    };
    let (mut emp, mut want) = (0.0f64, 0.0f64);
    for (k, z) in buf.iter().enumerate().take(m / 2).skip(1) {
        let w = bin * k as f64;
        if w > 20.0 {
            break;
        }
        emp = emp.max(z.norm());
        want = want.max(l.eval(w).unwrap().norm());
    }
    assert!((emp / want - 1.0).abs() < 0.05, "{emp} vs {want}");
    assert!((want - 2.0 / 3f64.sqrt()).abs() < 5e-3, "{want}");
}

#[test]
fn error_satisfies_spacing_law() {
    let h = 0.8;
    let tr = simulate_chain(&pd(h), 2, &[impulse(0), sine(1, 0.7, 1.0, 0.0)], 1e-3, 10.0).unwrap();
    let dt = tr.dt;
    for i in 1..=2 {
        let xp = tr.signal(&format!("x{}", i - 1)).unwrap();
        let x = tr.signal(&format!("x{i}")).unwrap();
        let e = tr.signal(&format!("e{i}")).unwrap();
        let scale = e.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for j in 1..x.len() - 1 {
            let xd = (x[j + 1] - x[j - 1]) / (2.0 * dt);
            let want = xp[j] - x[j] - h * xd;
            assert!((e[j] - want).abs() < 1e-2 * scale.max(1.0), "t = {}", tr.t[j]);
        }
    }
}

#[test]
fn unidirectional_coupling() {
    let sc = ChainScenario::cacc(
        tf(&[2.0, 1.0], &[1.0]),
        0.3,
        tf(&[1.0, 0.3], &[1.0, 0.5]),
        tf(&[0.5], &[1.0, 1.0]),
        tf(&[1.0], &[1.0, 0.2]),
    )
    .unwrap();
    let base = [impulse(0), sine(1, 1.0, 1.0, 0.0)];
    let a = simulate_chain(&sc, 4, &base, 1e-3, 5.0).unwrap();
    let mut perturbed = base.to_vec();
    perturbed.push(sine(3, 2.0, 5.0, 0.1));
    let b = simulate_chain(&sc, 4, &perturbed, 1e-3, 5.0).unwrap();
    for j in 0..3 {
        assert_eq!(a.signal(&format!("x{j}")), b.signal(&format!("x{j}")), "vehicle {j}");
    }
    assert_ne!(a.signal("x3"), b.signal("x3"));
}

#[test]
fn norm_examples() {
    assert!((l2_norm(&vec![2.0; 1001], 0.01) - 2.0 * 10f64.sqrt()).abs() < 1e-12);
    let mut tr = simulate_chain(&pd(1.0), 2, &[], 0.01, 1.0).unwrap();
    tr.signals.insert("e1".into(), vec![1.0; tr.t.len()]);
    tr.signals.insert("e2".into(), vec![1.0; tr.t.len()]);
    let n = trace_l2_norms(&tr);
    assert!((n.e_total - 2f64.sqrt() * n.per_signal["e1"]).abs() < 1e-12);
    assert!((n.per_signal["e1"] - 1.0).abs() < 1e-12);
}

#[test]
fn parseval() {
    let sc = pd(1.0);
    let noise = DisturbanceSpec::new(
        DisturbanceKind::LowpassNoise {
            cutoff: 0.5,
            seed: 3,
            amplitude: 1.0,
        },
        Target::All,
    );
    let tr = simulate_chain(&sc, 2, &[noise], 1e-2, 10.0).unwrap();
    for name in ["d0", "d2", "e2"] {
        let v = tr.signal(name).unwrap();
        let dt = tr.sample_dt();
        let m = v.len();
        let mut buf: Vec<rustfft::num_complex::Complex<f64>> =
            v.iter().map(|&x| rustfft::num_complex::Complex::new(x, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        let freq = (buf.iter().map(|z| z.norm_sqr()).sum::<f64>() * dt / m as f64).sqrt();
        let time = l2_norm(v, dt);
        assert!((freq / time - 1.0).abs() < 0.02, "{name}: {freq} vs {time}");
    }
}

#[test]
fn step_and_stability_guards() {
    let sc = ChainScenario::headway(tf(&[400.0, 40.0], &[1.0]), 0.0).unwrap();
    match simulate_chain(&sc, 1, &[impulse(0)], 0.05, 5.0) {
        Err(Error::StepTooLarge { max_dt, .. }) => assert!(max_dt < 0.05),
        other => panic!("{other:?}"),
    }
    // K = 1 - 0.5 s: s^2 - 0.5 s + 1 is unstable.
    let bad = ChainScenario::headway(tf(&[1.0, -0.5], &[1.0]), 0.0).unwrap();
    let tr = simulate_chain(&bad, 1, &[impulse(0)], 1e-2, 500.0).unwrap();
    assert!(!tr.warnings.is_empty());
    assert!(tr.horizon <= UNSTABLE_HORIZON_CAP);
    assert!(simulate_chain(&pd(1.0), 2, &[impulse(5)], 1e-2, 5.0).is_err());
    assert!(simulate_chain(&pd(1.0), 2, &[], 5.0, 1.0).is_err());
}

#[test]
fn records_and_exports() {
    let opts = SimOptions {
        record_every: 10,
        record: RecordSet::ErrorsAndDisturbances,
        w_jitter: None,
    };
    let tr = simulate_chain_with(&pd(0.5), 2, &[impulse(0)], 1e-3, 1.0, &opts).unwrap();
    assert_eq!(tr.t.len(), 101);
    let keys: Vec<&str> = tr.signals.keys().map(String::as_str).collect();
    assert_eq!(keys, ["d0", "e1", "d1", "e2", "d2"]);
    let mut out = Vec::new();
    write_trace_csv(&tr, &["demo".into()], &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# demo"));
    assert_eq!(lines.next(), Some("t,d0,e1,d1,e2,d2"));
    assert_eq!(lines.count(), 101);
}

#[test]
fn w_jitter_is_seeded_and_changes_the_run() {
    let sc = ChainScenario::general(
        tf(&[1.0, 1.0], &[1.0]),
        tf(&[0.2], &[1.0, 1.0]),
        tf(&[0.5], &[1.0, 2.0]),
        tf(&[0.3], &[1.0, 1.0]),
        tf(&[1.0], &[1.0, 0.5]),
    )
    .unwrap();
    let run = |seed| {
        let opts = SimOptions {
            w_jitter: seed,
            ..SimOptions::default()
        };
        simulate_chain_with(&sc, 3, &[sine(0, 0.5, 1.0, 0.0)], 1e-2, 20.0, &opts).unwrap()
    };
    assert_eq!(run(Some(4)), run(Some(4)));
    assert_ne!(run(Some(4)).signal("x3"), run(None).signal("x3"));
}

/// Steady-state gain of the sinusoid along the top right singular vector.
fn sine_at_peak(sc: &ChainScenario, n: usize, omega: f64, dt: f64, periods: f64) -> (f64, f64) {
    let at = build_links(sc).unwrap().at(omega).unwrap();
    let (sigma, v) = ChainOperator { at, n }.top_singular();
    let specs: Vec<DisturbanceSpec> = v
        .iter()
        .enumerate()
        .map(|(i, z): (usize, &Complex64)| sine(i, omega, z.norm(), z.arg() + std::f64::consts::FRAC_PI_2))
        .collect();
    let period = 2.0 * std::f64::consts::PI / omega;
    let settle = 60.0f64.max(10.0 * period);
    let horizon = settle + periods * period;
    let opts = SimOptions {
        record: RecordSet::ErrorsAndDisturbances,
        ..SimOptions::default()
    };
    let tr = simulate_chain_with(sc, n, &specs, dt, horizon, &opts).unwrap();
    (trace_l2_norms_from(&tr, settle).gain(), sigma)
}

#[test]
fn sine_along_top_singular_vector_recovers_the_gain() {
    let grid = FrequencyGrid::default();
    for sc in [
        pd(0.0),
        ChainScenario::headway(tf(&[1.0, 2.0, 1.0], &[0.0, 1.0]), 3.0).unwrap(),
    ] {
        let n = 4;
        let peak = def1_gain(&sc, n, &grid).unwrap();
        let omega = peak.omega.max(0.05);
        let (emp, sigma) = sine_at_peak(&sc, n, omega, 1e-2, 20.0);
        assert!((emp / sigma - 1.0).abs() < 0.1, "{emp} vs {sigma} at {omega}");
        assert!(emp <= peak.gain * 1.05);
    }
}

#[test]
fn empirical_gain_below_def1_for_every_variant() {
    let grid = FrequencyGrid::default();
    let k = tf(&[1.0, 1.0], &[1.0]);
    let scenarios = [
        pd(0.7),
        ChainScenario::cacc(
            k.clone(),
            0.0,
            tf(&[1.0, 0.3], &[1.0, 0.5]),
            tf(&[0.5], &[1.0, 1.0]),
            tf(&[1.0], &[1.0, 0.2]),
        )
        .unwrap(),
        ChainScenario::general(
            k.clone(),
            tf(&[0.2], &[1.0, 1.0]),
            tf(&[0.5], &[1.0, 2.0]),
            tf(&[0.3], &[1.0, 1.0]),
            tf(&[1.0], &[1.0, 0.5]),
        )
        .unwrap(),
        ChainScenario::mounts(k, tf(&[20.0, 4.0], &[1.0]), tf(&[30.0, 5.0], &[1.0])).unwrap(),
    ];
    let noise = DisturbanceSpec::new(
        DisturbanceKind::LowpassNoise {
            cutoff: 2.0,
            seed: 11,
            amplitude: 1.0,
        },
        Target::All,
    );
    for sc in &scenarios {
        let g = def1_gain(sc, 3, &grid).unwrap().gain;
        let tr = simulate_chain(sc, 3, &[noise.clone()], 1e-3, 40.0).unwrap();
        let emp = trace_l2_norms(&tr).gain();
        assert!(emp > 0.0 && emp <= g * 1.05, "{:?}: {emp} vs {g}", sc.variant());
    }
}
