use std::io::Write;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::sim::SimTrace;
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L2Norms {
    pub per_signal: IndexMap<String, f64>,
    /// `sqrt(sum_i ||e_i||^2)` over followers `1..=N`.
    pub e_total: f64,
    /// Same over the disturbances `d_0..d_N`.
    pub d_total: f64,
}

impl L2Norms {
    /// `e_total / d_total`, zero when there is no input.
    pub fn gain(&self) -> f64 {
        if self.d_total > 0.0 {
            self.e_total / self.d_total
        } else {
            0.0
        }
    }
}

/// Trapezoid-rule `sqrt(int v^2 dt)` of samples spaced `h` apart.
pub fn l2_norm(v: &[f64], h: f64) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let inner: f64 = v[1..v.len() - 1].iter().map(|x| x * x).sum();
    let ends = 0.5 * (v[0] * v[0] + v[v.len() - 1] * v[v.len() - 1]);
    ((inner + ends) * h).sqrt()
}

pub fn trace_l2_norms(trace: &SimTrace) -> L2Norms {
    trace_l2_norms_from(trace, 0.0)
}

/// Norms over `[t_start, horizon]`, e.g. to drop a transient.
pub fn trace_l2_norms_from(trace: &SimTrace, t_start: f64) -> L2Norms {
    let h = trace.sample_dt();
    let first = trace.t.partition_point(|&t| t < t_start - 1e-9 * h);
    let per_signal: IndexMap<String, f64> = trace
        .signals
        .iter()
        .map(|(k, v)| (k.clone(), l2_norm(&v[first.min(v.len())..], h)))
        .collect();
    let sum_sq = |names: Vec<String>| -> f64 {
        names
            .iter()
            .filter_map(|n| per_signal.get(n))
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    };
    let e_total = sum_sq((1..=trace.n).map(|i| format!("{}{i}", trace.error_prefix)).collect());
    let d_total = sum_sq((0..=trace.n).map(|i| format!("d{i}")).collect());
    L2Norms {
        per_signal,
        e_total,
        d_total,
    }
}

/// CSV with columns `t` then every signal, 17 significant digits.
/// `comment` lines are written first, each prefixed with `# `.
pub fn write_trace_csv<W: Write>(trace: &SimTrace, comment: &[String], mut w: W) -> Result<()> {
    for c in comment {
        writeln!(w, "# {c}")?;
    }
    let mut header = String::from("t");
    for k in trace.signals.keys() {
        header.push(',');
        header.push_str(k);
    }
    writeln!(w, "{header}")?;
    let cols: Vec<&Vec<f64>> = trace.signals.values().collect();
    let mut line = String::new();
    for (j, t) in trace.t.iter().enumerate() {
        line.clear();
        line.push_str(&format!("{t:.16e}"));
        for c in &cols {
            line.push(',');
            line.push_str(&format!("{:.16e}", c.get(j).copied().unwrap_or(f64::NAN)));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}
