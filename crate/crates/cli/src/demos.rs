//! Packaged demos, one per impossibility or boundedness result, each on a
//! fixed scenario.

use platoon_core::analysis::{
    def1_gain, def2_gain, hinf, jury_sweep, magnitude_inf, thm2_bound, trace_peak, FrequencyGrid,
};
use platoon_core::chain::{build_links, ChainScenario, LinkMaps};
use platoon_core::scenarios;

use crate::config::Config;
use crate::output::{provenance, write_atomic, CsvTable, Sink};
use crate::{CliError, Outcome};

/// Headway factor of the PID demo, in units of the minimal headway.
pub const PID_DEMO_FACTOR: f64 = 2.0;

struct Demo {
    scenario: ChainScenario,
    table: CsvTable,
    pass: bool,
    detail: String,
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

/// PD with headway: the leader-driven gain grows like `sqrt(N)` at low
/// frequency.
fn demo1() -> Result<Demo, CliError> {
    let sc = scenarios::pd_headway();
    let grid = FrequencyGrid::new(1e-6, 1e-3, 64, 3)?;
    let mut table = CsvTable::new(&["n", "def1_gain", "def1_over_sqrt_n"]);
    let mut ratios = Vec::new();
    for n in [16usize, 32, 64, 128, 256] {
        let g = def1_gain(&sc, n, &grid)?.gain;
        let r = g / (n as f64).sqrt();
        table.push(vec![n.into(), g.into(), r.into()]);
        ratios.push(r);
    }
    let (lo, hi) = spread(&ratios);
    Ok(Demo {
        scenario: sc,
        table,
        pass: (hi - lo) / lo < 0.1,
        detail: format!("def1/sqrt(N) within [{lo:.4}, {hi:.4}] on w <= 1e-3"),
    })
}

fn spread(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)))
}

/// PID with headway: the gain is bounded independently of `N`.
fn demo2() -> Result<Demo, CliError> {
    let sc = scenarios::pid_headway(PID_DEMO_FACTOR);
    let grid = FrequencyGrid::default();
    let mut table = CsvTable::new(&["n", "def1_gain", "def1_omega", "def2_gain", "bound_at_peak"]);
    let mut gains = Vec::new();
    for n in [8usize, 16, 32, 64, 128] {
        let g = def1_gain(&sc, n, &grid)?;
        let d2 = def2_gain(&sc, n, &grid)?.gain;
        let bound = thm2_bound(&sc, n, g.omega)?;
        table.push(vec![n.into(), g.gain.into(), g.omega.into(), d2.into(), bound.into()]);
        gains.push(g.gain);
    }
    let (lo, hi) = spread(&gains);
    Ok(Demo {
        scenario: sc,
        table,
        pass: (hi - lo) / lo < 0.05,
        detail: format!("def1 within [{lo:.4}, {hi:.4}] for N = 8..128, h = {PID_DEMO_FACTOR} h_min"),
    })
}

fn omega_table(columns: &[&str], f: impl Fn(f64) -> Result<Vec<f64>, CliError>) -> Result<CsvTable, CliError> {
    let mut header = vec!["omega"];
    header.extend_from_slice(columns);
    let mut table = CsvTable::new(&header);
    for w in FrequencyGrid::default().points() {
        let mut row = vec![w.into()];
        row.extend(f(w)?.into_iter().map(Into::into));
        table.push(row);
    }
    Ok(table)
}

/// CACC without headway: the trace of the 2x2 link exceeds 1 somewhere.
fn demo3() -> Result<Demo, CliError> {
    let sc = scenarios::cacc_demo();
    let links = build_links(&sc)?;
    let table = omega_table(&["trace_abs", "det_abs"], |w| {
        let at = links.at(w)?;
        Ok(vec![at.trace().norm(), at.det().norm()])
    })?;
    let peak = trace_peak(&sc, &FrequencyGrid::default())?;
    Ok(Demo {
        scenario: sc,
        table,
        pass: peak.value > 1.0,
        detail: format!("max |trace| = {:.4} at w = {:.4}", peak.value, peak.omega),
    })
}

/// General scalar communication: the Jury test fails at some frequency.
fn demo4() -> Result<Demo, CliError> {
    let sc = scenarios::general_demo();
    let pts = jury_sweep(&sc, &FrequencyGrid::default())?;
    let mut table = CsvTable::new(&["omega", "trace_re", "trace_im", "det_re", "det_im", "jury_pass"]);
    for p in &pts {
        table.push(vec![
            p.omega.into(),
            p.trace_re.into(),
            p.trace_im.into(),
            p.det_re.into(),
            p.det_im.into(),
            p.pass.into(),
        ]);
    }
    let failing = pts.iter().filter(|p| !p.pass).count();
    Ok(Demo {
        scenario: sc,
        table,
        pass: failing > 0,
        detail: format!("{failing} of {} frequencies fail the Jury test", pts.len()),
    })
}

/// Sensor mounts: attenuating somewhere forces amplification elsewhere.
fn demo5() -> Result<Demo, CliError> {
    let sc = scenarios::mounts_demo();
    let LinkMaps::Scalar(link) = build_links(&sc)? else {
        return Err(CliError::Numeric("mount link is not scalar".into()));
    };
    let a = link.t.clone();
    let table = omega_table(&["abs_a"], |w| Ok(vec![a.eval(w)?.norm()]))?;
    let grid = FrequencyGrid::default();
    let inf = magnitude_inf(&a, &grid)?.peak;
    let sup = hinf(&a, &grid)?.peak;
    let pass = inf >= 1.0 - 1e-6 || sup > 1.0 + 1e-6;
    Ok(Demo {
        scenario: sc,
        table,
        pass,
        detail: format!("inf |A| = {inf:.4}, sup |A| = {sup:.4}"),
    })
}

/// Runs demo `n` and writes `demo{n}.csv` and the scenario it used.
pub fn cmd_demo_theorem(n: u8, sink: &Sink) -> Result<Outcome, CliError> {
    let demo = match n {
        1 => demo1(),
        2 => demo2(),
        3 => demo3(),
        4 => demo4(),
        5 => demo5(),
        _ => return Err(CliError::Config(format!("demo number must be 1..=5, got {n}"))),
    }?;
    let config = Config::from_scenario(&demo.scenario);
    let hash = config.hash();
    let scenario_path = sink.dir.join(format!("demo{n}_scenario.toml"));
    write_atomic(&scenario_path, config.to_toml().as_bytes())?;
    let csv = sink.csv(&format!("demo{n}.csv"), &demo.table, &provenance(&hash))?;
    let line = format!("theorem {n}: {} ({})", verdict(demo.pass), demo.detail);
    Ok(Outcome {
        report: line.clone() + "\n",
        files: vec![csv, scenario_path],
        warnings: Vec::new(),
        verdict: Some(line),
    })
}
