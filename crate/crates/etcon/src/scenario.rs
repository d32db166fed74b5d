//! Scenario files: JSON schema, validation, and single-run execution.

use std::path::Path;

use serde::Deserialize;

use crate::clock_sync::{run_clock_sync, ClockModel};
use crate::engine::{run_event_driven, Trace};
use crate::graph::{networks, Digraph};
use crate::metrics::{convergence_time, count_events, energy, h2_norm_sq};
use crate::output::{self, MetricsRow};
use crate::triggers::{validate_and_derive, TriggerLaw};
use crate::{Error, Result};

/// A network given either by builtin name or inline matrix.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum NetworkSpec {
    Named(String),
    Matrix(Vec<Vec<f64>>),
}

/// Scalar-or-per-agent parameter.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ParamSpec {
    Scalar(f64),
    PerAgent(Vec<f64>),
}

impl ParamSpec {
    pub fn resolve(&self, n: usize, name: &str) -> Result<Vec<f64>> {
        match self {
            ParamSpec::Scalar(v) => Ok(vec![*v; n]),
            ParamSpec::PerAgent(vs) => {
                if vs.len() != n {
                    return Err(Error::Scenario(format!(
                        "{name} has length {}, expected {n}",
                        vs.len()
                    )));
                }
                Ok(vs.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSpec {
    pub lambda: f64,
    pub sigma: ParamSpec,
    /// Defaults to `0.5 / d_i^out` per agent when omitted.
    pub b: Option<ParamSpec>,
    pub c: Option<ParamSpec>,
    /// Forced-rebroadcast window override; defaults to 99% of the dwell bound.
    pub eps: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Consensus,
    Clocksync,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub sigma: Option<Vec<f64>>,
    pub lambda: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub network: NetworkSpec,
    pub mode: Mode,
    pub law: LawSpec,
    pub x0: Option<Vec<f64>>,
    pub gamma: Option<Vec<f64>>,
    pub alpha0: Option<Vec<f64>>,
    pub horizon: f64,
    #[serde(default)]
    pub seed: u64,
    pub sweep: Option<SweepSpec>,
    pub mc_runs: Option<usize>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.check()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    fn check(&self) -> Result<()> {
        if self.horizon <= 0.0 {
            return Err(Error::Scenario(format!(
                "horizon = {} must be positive",
                self.horizon
            )));
        }
        match self.mode {
            Mode::Consensus => {
                if self.x0.is_none() {
                    return Err(Error::Scenario("consensus mode requires x0".into()));
                }
                if self.gamma.is_some() || self.alpha0.is_some() {
                    return Err(Error::Scenario(
                        "consensus mode takes x0 only, not gamma/alpha0".into(),
                    ));
                }
            }
            Mode::Clocksync => {
                if self.gamma.is_none() {
                    return Err(Error::Scenario("clocksync mode requires gamma".into()));
                }
                if self.x0.is_some() {
                    return Err(Error::Scenario(
                        "clocksync mode takes gamma/alpha0, not x0".into(),
                    ));
                }
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.sigma.as_ref().is_some_and(|v| v.is_empty())
                || sweep.lambda.as_ref().is_some_and(|v| v.is_empty())
            {
                return Err(Error::Scenario("sweep lists must be non-empty".into()));
            }
        }
        Ok(())
    }

    pub fn build_graph(&self) -> Result<Digraph> {
        match &self.network {
            NetworkSpec::Named(name) => networks::by_name(name).ok_or_else(|| {
                Error::Scenario(format!(
                    "unknown builtin network {name:?} (expected net1..net4)"
                ))
            }),
            NetworkSpec::Matrix(rows) => Digraph::from_rows(rows),
        }
    }

    /// Validates and derives the trigger law, optionally overriding
    /// `sigma`/`lambda` (used by sweep cells).
    pub fn build_law(
        &self,
        g: &Digraph,
        sigma_override: Option<f64>,
        lambda_override: Option<f64>,
    ) -> Result<TriggerLaw> {
        let n = g.n();
        let sigma = match sigma_override {
            Some(s) => vec![s; n],
            None => self.law.sigma.resolve(n, "sigma")?,
        };
        let default_bc = || (0..n).map(|i| 0.5 / g.out_degree(i)).collect::<Vec<f64>>();
        let b = match &self.law.b {
            Some(spec) => spec.resolve(n, "b")?,
            None => default_bc(),
        };
        let c = match &self.law.c {
            Some(spec) => spec.resolve(n, "c")?,
            None => default_bc(),
        };
        let lambda = lambda_override.unwrap_or(self.law.lambda);
        validate_and_derive(g, lambda, &sigma, &b, &c, self.law.eps.as_deref())
    }
}

/// One-line run summary.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub n_events: usize,
    pub t_con: Option<f64>,
    pub energy: Option<f64>,
    pub h2sq: f64,
}

impl std::fmt::Display for RunSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "N_e = {}, T_con = {}, E = {}, C = {}",
            self.n_events,
            self.t_con
                .map(|v| format!("{v:.6}"))
                .unwrap_or_else(|| "not reached".into()),
            self.energy
                .map(|v| format!("{v:.6}"))
                .unwrap_or_else(|| "n/a".into()),
            format_args!("{:.6}", self.h2sq),
        )
    }
}

/// Runs one scenario and returns the trace plus summary metrics.
pub fn execute(scenario: &Scenario) -> Result<(Digraph, TriggerLaw, Trace, RunSummary)> {
    let g = scenario.build_graph()?;
    let law = scenario.build_law(&g, None, None)?;
    let trace = match scenario.mode {
        Mode::Consensus => {
            let x0 = scenario.x0.as_ref().unwrap();
            if x0.len() != g.n() {
                return Err(Error::Scenario(format!(
                    "x0 has length {}, expected {}",
                    x0.len(),
                    g.n()
                )));
            }
            run_event_driven(&g, &law, x0, scenario.horizon, &vec![1.0; g.n()])?
        }
        Mode::Clocksync => {
            let model = ClockModel::new(scenario.gamma.clone().unwrap(), scenario.alpha0.clone())?;
            let (trace, _report) = run_clock_sync(&g, &law, &model, scenario.horizon)?;
            trace
        }
    };
    let summary = summarize(&g, &trace, scenario.gamma.as_deref())?;
    Ok((g, law, trace, summary))
}

/// Computes the metric suite for a finished trace.
pub fn summarize(g: &Digraph, trace: &Trace, gamma: Option<&[f64]>) -> Result<RunSummary> {
    let counts = count_events(trace);
    let t_con = convergence_time(g, trace, trace.lambda, 0.01);
    let e = match t_con {
        Some(t) => Some(energy(trace, t, gamma)?),
        None => None,
    };
    Ok(RunSummary {
        n_events: counts.total,
        t_con,
        energy: e,
        h2sq: h2_norm_sq(trace).value,
    })
}

/// Runs a scenario and writes the CSV outputs into `outdir`.
pub fn run_to_dir(scenario: &Scenario, outdir: &Path) -> Result<RunSummary> {
    std::fs::create_dir_all(outdir)?;
    let (g, law, trace, summary) = execute(scenario)?;
    output::write_events(&outdir.join("events.csv"), &trace)?;
    output::write_segments(&outdir.join("segments.csv"), &trace)?;
    output::write_lyapunov(&outdir.join("lyapunov.csv"), &g, &trace)?;
    if scenario.mode == Mode::Clocksync {
        output::write_clocks(
            &outdir.join("clocks.csv"),
            &trace,
            scenario.gamma.as_ref().unwrap(),
        )?;
    }
    let sigma0 = match &scenario.law.sigma {
        ParamSpec::Scalar(v) => *v,
        ParamSpec::PerAgent(vs) => vs[0],
    };
    let row = MetricsRow {
        law: output::law_name(law.lambda),
        lambda: law.lambda,
        sigma: sigma0,
        seed: scenario.seed,
        n_events: summary.n_events as f64,
        t_con: summary.t_con,
        energy: summary.energy,
        h2sq: summary.h2sq,
    };
    output::write_metrics(&outdir.join("metrics.csv"), &[row])?;
    Ok(summary)
}
