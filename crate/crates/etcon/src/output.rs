//! CSV emission. All decimals are written with 12 significant digits so
//! that identical runs produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::engine::{Cause, Trace};
use crate::graph::Digraph;
use crate::lyapunov::lyapunov_value;
use crate::Result;

/// 12 significant digits.
pub fn sig(v: f64) -> String {
    format!("{v:.11e}")
}

fn cause_str(c: Cause) -> &'static str {
    match c {
        Cause::Initial => "initial",
        Cause::Threshold => "threshold",
        Cause::Forced => "forced",
    }
}

/// `events.csv`: one row per broadcast, `(t, agent, cause)`.
pub fn write_events(path: &Path, trace: &Trace) -> Result<()> {
    let mut out = String::from("t,agent,cause\n");
    for ev in &trace.events {
        for &(agent, cause) in &ev.agents {
            writeln!(out, "{},{},{}", sig(ev.t), agent + 1, cause_str(cause)).unwrap();
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// `segments.csv`: `(t_start, t_end, x_1..x_n, u_1..u_n)`.
pub fn write_segments(path: &Path, trace: &Trace) -> Result<()> {
    let n = trace.n();
    let mut out = String::from("t_start,t_end");
    for i in 1..=n {
        write!(out, ",x_{i}").unwrap();
    }
    for i in 1..=n {
        write!(out, ",u_{i}").unwrap();
    }
    out.push('\n');
    for seg in &trace.segments {
        write!(out, "{},{}", sig(seg.t_start), sig(seg.t_end)).unwrap();
        for v in &seg.x_start {
            write!(out, ",{}", sig(*v)).unwrap();
        }
        for v in &seg.u {
            write!(out, ",{}", sig(*v)).unwrap();
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// `lyapunov.csv`: `(t, V1, V2, Vlambda)` at segment endpoints.
pub fn write_lyapunov(path: &Path, g: &Digraph, trace: &Trace) -> Result<()> {
    let xbar = trace.consensus_point();
    let mut out = String::from("t,v1,v2,vlambda\n");
    let mut emit = |t: f64| {
        let x = trace.state_at(t);
        writeln!(
            out,
            "{},{},{},{}",
            sig(t),
            sig(lyapunov_value(1.0, g, &x, xbar)),
            sig(lyapunov_value(0.0, g, &x, xbar)),
            sig(lyapunov_value(trace.lambda, g, &x, xbar)),
        )
        .unwrap();
    };
    for seg in &trace.segments {
        emit(seg.t_start);
    }
    if let Some(last) = trace.segments.last() {
        emit(last.t_end);
    }
    fs::write(path, out)?;
    Ok(())
}

/// `clocks.csv`: `(t, l_1..l_n, T_1..T_n, y_1..y_n)` at segment endpoints,
/// with `l_i = gamma_i t` and `T_i = y_i(t) t`.
pub fn write_clocks(path: &Path, trace: &Trace, gamma: &[f64]) -> Result<()> {
    let n = trace.n();
    let mut out = String::from("t");
    for i in 1..=n {
        write!(out, ",l_{i}").unwrap();
    }
    for i in 1..=n {
        write!(out, ",T_{i}").unwrap();
    }
    for i in 1..=n {
        write!(out, ",y_{i}").unwrap();
    }
    out.push('\n');
    let mut emit = |t: f64| {
        let y = trace.state_at(t);
        write!(out, "{}", sig(t)).unwrap();
        for g in gamma {
            write!(out, ",{}", sig(g * t)).unwrap();
        }
        for yi in &y {
            write!(out, ",{}", sig(yi * t)).unwrap();
        }
        for yi in &y {
            write!(out, ",{}", sig(*yi)).unwrap();
        }
        out.push('\n');
    };
    for seg in &trace.segments {
        emit(seg.t_start);
    }
    if let Some(last) = trace.segments.last() {
        emit(last.t_end);
    }
    fs::write(path, out)?;
    Ok(())
}

/// One row of `metrics.csv` / `sweep.csv`.
#[derive(Debug, Clone)]
pub struct MetricsRow {
    pub law: String,
    pub lambda: f64,
    pub sigma: f64,
    pub seed: u64,
    pub n_events: f64,
    pub t_con: Option<f64>,
    pub energy: Option<f64>,
    pub h2sq: f64,
}

fn opt(v: Option<f64>) -> String {
    v.map(sig).unwrap_or_default()
}

pub fn metrics_header() -> &'static str {
    "law,lambda,sigma,seed,n_events,t_con,energy,h2sq\n"
}

pub fn metrics_line(row: &MetricsRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{}\n",
        row.law,
        sig(row.lambda),
        sig(row.sigma),
        row.seed,
        sig(row.n_events),
        opt(row.t_con),
        opt(row.energy),
        sig(row.h2sq),
    )
}

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let mut out = String::from(metrics_header());
    for row in rows {
        out.push_str(&metrics_line(row));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Display name of the law selected by `lambda`.
pub fn law_name(lambda: f64) -> String {
    if lambda == 1.0 {
        "alg1".into()
    } else if lambda == 0.0 {
        "alg2".into()
    } else {
        "combined".into()
    }
}
