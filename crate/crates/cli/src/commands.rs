use platoon_core::analysis::{
    bode_csi_check, cancellation_audit, def1_gain, gain_vs_n_sweep, headway_min_a, headway_min_b, BodeSummary,
    FrequencyGrid, GrowthClass, HeadwayResult,
};
use platoon_core::chain::{build_links, ChainScenario, Variant};
use platoon_core::ratfun::RationalTF;
use platoon_core::simkit::{simulate_chain_with, trace_l2_norms, write_trace_csv, RecordSet, SimOptions};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{provenance, write_atomic, CsvTable, Sink};
use crate::{CliError, Outcome};

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub grid_min: Option<f64>,
    pub grid_max: Option<f64>,
    pub points_per_decade: Option<usize>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, rc: &mut RunConfig) {
        let a = &mut rc.config.analysis;
        if let Some(v) = self.grid_min {
            a.grid_min = v;
        }
        if let Some(v) = self.grid_max {
            a.grid_max = v;
        }
        if let Some(v) = self.points_per_decade {
            a.points_per_decade = v;
        }
        if let Some(s) = self.seed {
            rc.config.reseed(s);
        }
    }
}

pub(crate) fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::Headway => "headway",
        Variant::Cacc => "cacc",
        Variant::General => "general",
        Variant::Mounts => "mounts",
    }
}

fn growth_name(g: GrowthClass) -> &'static str {
    match g {
        GrowthClass::Bounded => "bounded",
        GrowthClass::SqrtN => "sqrt_n",
        GrowthClass::Other => "other",
    }
}

struct Prepared {
    sc: ChainScenario,
    grid: FrequencyGrid,
    hash: String,
    warnings: Vec<String>,
}

fn prepare(rc: &RunConfig) -> Result<Prepared, CliError> {
    let sc = rc.config.scenario()?;
    let grid = rc.config.grid()?;
    let mut warnings: Vec<String> = cancellation_audit(&sc, &grid).into_iter().map(|w| w.message).collect();
    if !build_links(&sc)?.stable() {
        warnings.push("the chain link is unstable; gains are infinite".into());
    }
    Ok(Prepared {
        sc,
        grid,
        hash: rc.config.hash(),
        warnings,
    })
}

#[derive(Serialize)]
pub struct GainRow {
    pub n: usize,
    pub def1_gain: f64,
    pub def1_omega: f64,
    pub def2_gain: f64,
    pub def2_omega: f64,
}

#[derive(Serialize)]
struct AnalyzeReport {
    tool: String,
    config_sha256: String,
    variant: &'static str,
    h: f64,
    links_stable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    headway: Option<HeadwayResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    headway_sufficient: Option<bool>,
    growth_class: &'static str,
    c_estimate: f64,
    warnings: Vec<String>,
    gains: Vec<GainRow>,
}

fn gain_rows(
    sc: &ChainScenario,
    ns: &[usize],
    grid: &FrequencyGrid,
) -> Result<(Vec<GainRow>, GrowthClass, f64), CliError> {
    let rep = gain_vs_n_sweep(sc, ns, grid)?;
    let rows = rep
        .per_n
        .iter()
        .map(|(&n, g)| GainRow {
            n,
            def1_gain: g.def1_gain,
            def1_omega: g.peak_omega,
            def2_gain: g.def2_gain,
            def2_omega: g.def2_peak_omega,
        })
        .collect();
    Ok((rows, rep.growth_class, rep.c_estimate))
}

fn gains_table(rows: &[GainRow]) -> CsvTable {
    let mut t = CsvTable::new(&[
        "n",
        "def1_gain",
        "def1_omega",
        "def2_gain",
        "def2_omega",
        "def1_over_sqrt_n",
    ]);
    for r in rows {
        t.push(vec![
            r.n.into(),
            r.def1_gain.into(),
            r.def1_omega.into(),
            r.def2_gain.into(),
            r.def2_omega.into(),
            (r.def1_gain / (r.n as f64).sqrt()).into(),
        ]);
    }
    t
}

/// Minimal headway of the controller, for the variants that have a headway.
fn headway_of(p: &Prepared) -> (Option<HeadwayResult>, Option<String>) {
    if !matches!(p.sc.variant(), Variant::Headway | Variant::Cacc) {
        return (None, None);
    }
    match headway_min_b(p.sc.k(), &p.grid) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(format!("minimal headway unavailable: {e}"))),
    }
}

/// Gains over the configured chain lengths, minimal headway and audit warnings.
pub fn cmd_analyze(rc: &RunConfig, sink: &Sink) -> Result<Outcome, CliError> {
    let mut p = prepare(rc)?;
    let ns = rc.config.chain_lengths()?;
    let (headway, warn) = headway_of(&p);
    p.warnings.extend(warn);
    let (gains, growth, c) = gain_rows(&p.sc, ns, &p.grid)?;
    let report = AnalyzeReport {
        tool: provenance(&p.hash),
        config_sha256: p.hash.clone(),
        variant: variant_name(p.sc.variant()),
        h: p.sc.h(),
        links_stable: build_links(&p.sc)?.stable(),
        headway_sufficient: headway.map(|r| p.sc.h() > r.h_min),
        headway,
        growth_class: growth_name(growth),
        c_estimate: c,
        warnings: p.warnings.clone(),
        gains,
    };
    let csv = sink.csv("analyze_gains.csv", &gains_table(&report.gains), &provenance(&p.hash))?;
    let (path, text) = sink.report("analyze", &report)?;
    Ok(Outcome {
        report: text,
        files: vec![path, csv],
        warnings: p.warnings,
        verdict: None,
    })
}

#[derive(Serialize)]
struct HeadwayReport {
    tool: String,
    h: f64,
    criterion_b: HeadwayResult,
    headway_sufficient: bool,
    /// Criterion for the loop `K (1 + h s)` with the configured `h`.
    #[serde(skip_serializing_if = "Option::is_none")]
    criterion_a: Option<HeadwayResult>,
}

pub fn cmd_headway(rc: &RunConfig, sink: &Sink) -> Result<Outcome, CliError> {
    let p = prepare(rc)?;
    let b = headway_min_b(p.sc.k(), &p.grid)?;
    let a = if p.sc.h() > 0.0 {
        let kbar = p.sc.k().mul(&RationalTF::from_coeffs(&[1.0, p.sc.h()], &[1.0])?)?;
        Some(headway_min_a(&kbar, &p.grid)?)
    } else {
        None
    };
    let report = HeadwayReport {
        tool: provenance(&p.hash),
        h: p.sc.h(),
        headway_sufficient: p.sc.h() > b.h_min,
        criterion_b: b,
        criterion_a: a,
    };
    let (path, text) = sink.report("headway", &report)?;
    Ok(Outcome {
        report: text,
        files: vec![path],
        warnings: p.warnings,
        verdict: None,
    })
}

#[derive(Serialize)]
struct SweepReport {
    tool: String,
    growth_class: &'static str,
    c_estimate: f64,
    gains: Vec<GainRow>,
}

pub fn cmd_sweep_n(rc: &RunConfig, sink: &Sink) -> Result<Outcome, CliError> {
    let p = prepare(rc)?;
    let (gains, growth, c) = gain_rows(&p.sc, rc.config.chain_lengths()?, &p.grid)?;
    let csv = sink.csv("sweep_n.csv", &gains_table(&gains), &provenance(&p.hash))?;
    let report = SweepReport {
        tool: provenance(&p.hash),
        growth_class: growth_name(growth),
        c_estimate: c,
        gains,
    };
    let (path, text) = sink.report("sweep_n", &report)?;
    Ok(Outcome {
        report: text,
        files: vec![path, csv],
        warnings: p.warnings,
        verdict: None,
    })
}

#[derive(Serialize)]
struct BodeReport {
    tool: String,
    /// The loop `R = K (1 + h s) / s^2`.
    loop_num: Vec<f64>,
    loop_den: Vec<f64>,
    #[serde(flatten)]
    summary: BodeSummary,
}

/// Sensitivity integral of the spacing loop, plus `|T|` on the grid.
pub fn cmd_bode(rc: &RunConfig, sink: &Sink) -> Result<Outcome, CliError> {
    let p = prepare(rc)?;
    let r =
        p.sc.k()
            .mul(&RationalTF::from_coeffs(&[1.0, p.sc.h()], &[0.0, 0.0, 1.0])?)?;
    let rep = bode_csi_check(&r)?;
    let t = r.feedback()?;
    let mut table = CsvTable::new(&["omega", "abs_t", "log_abs_t_over_omega2"]);
    for w in p.grid.points() {
        let m = t.eval(w)?.norm();
        table.push(vec![w.into(), m.into(), (m.ln() / (w * w)).into()]);
    }
    let csv = sink.csv("bode.csv", &table, &provenance(&p.hash))?;
    let report = BodeReport {
        tool: provenance(&p.hash),
        loop_num: r.num().coeffs().to_vec(),
        loop_den: r.den().coeffs().to_vec(),
        summary: rep.summary(),
    };
    let (path, text) = sink.report("bode", &report)?;
    Ok(Outcome {
        report: text,
        files: vec![path, csv],
        warnings: p.warnings,
        verdict: None,
    })
}

#[derive(Serialize)]
struct SimReport {
    tool: String,
    n: usize,
    dt: f64,
    horizon: f64,
    e_total: f64,
    d_total: f64,
    empirical_gain: f64,
    def1_gain: f64,
    def1_omega: f64,
    warnings: Vec<String>,
}

/// Time-domain run with the configured disturbances; trace CSV plus norms.
pub fn cmd_simulate(rc: &RunConfig, sink: &Sink) -> Result<Outcome, CliError> {
    let mut p = prepare(rc)?;
    let cfg = &rc.config;
    cfg.check_sim()?;
    let d = cfg.disturbances(&rc.base_dir)?;
    let opts = SimOptions {
        record_every: cfg.sim.record_every,
        record: RecordSet::All,
        w_jitter: None,
    };
    let trace = simulate_chain_with(&p.sc, cfg.sim.n, &d, cfg.sim.dt, cfg.sim.horizon, &opts)?;
    p.warnings.extend(trace.warnings.iter().cloned());
    let norms = trace_l2_norms(&trace);
    let g = def1_gain(&p.sc, cfg.sim.n, &p.grid)?;
    let mut bytes = Vec::new();
    write_trace_csv(&trace, &[provenance(&p.hash)], &mut bytes)?;
    let csv = sink.dir.join("simulate.csv");
    write_atomic(&csv, &bytes)?;
    let report = SimReport {
        tool: provenance(&p.hash),
        n: trace.n,
        dt: trace.dt,
        horizon: trace.horizon,
        e_total: norms.e_total,
        d_total: norms.d_total,
        empirical_gain: norms.gain(),
        def1_gain: g.gain,
        def1_omega: g.omega,
        warnings: p.warnings.clone(),
    };
    let (path, text) = sink.report("simulate", &report)?;
    Ok(Outcome {
        report: text,
        files: vec![path, csv],
        warnings: p.warnings,
        verdict: None,
    })
}
