//! Parameter sweeps with reproducible Monte-Carlo clock drifts.
//!
//! Each sweep cell is a `(sigma, lambda)` pair; each cell runs `mc_runs`
//! clock synchronization simulations with drifts drawn uniformly from
//! `(0.7, 1.3)`. Drift streams use ChaCha8 keyed per run by a SplitMix64
//! hash of `(seed, sigma index, lambda index, run index)`, so every cell
//! is reproducible independently of execution order.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::clock_sync::ClockModel;
use crate::output::sig;
use crate::scenario::{Mode, Scenario};
use crate::{Error, Result};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Substream key for one Monte-Carlo run of one sweep cell.
pub fn substream_seed(seed: u64, sigma_idx: usize, lambda_idx: usize, run_idx: usize) -> u64 {
    let mut s = splitmix64(seed);
    s = splitmix64(s ^ sigma_idx as u64);
    s = splitmix64(s ^ lambda_idx as u64);
    splitmix64(s ^ run_idx as u64)
}

/// Draws `n` drifts uniformly from `(0.7, 1.3)`.
pub fn sample_drifts(n: usize, stream_seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed);
    (0..n).map(|_| rng.random_range(0.7..1.3)).collect()
}

/// Per-cell aggregate over the Monte-Carlo runs.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub lambda: f64,
    pub sigma: f64,
    pub runs_ok: usize,
    pub n_events_mean: f64,
    pub t_con_mean: Option<f64>,
    pub energy_mean: Option<f64>,
    pub h2sq_mean: f64,
    pub error: Option<String>,
}

/// Runs the full sweep; cells execute concurrently, aggregation order is
/// fixed by the cell grid.
pub fn run_sweep(scenario: &Scenario) -> Result<Vec<SweepCell>> {
    let sweep = scenario
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Scenario("scenario has no sweep section".into()))?;
    let sigma_default = match &scenario.law.sigma {
        crate::scenario::ParamSpec::Scalar(v) => *v,
        crate::scenario::ParamSpec::PerAgent(vs) => vs[0],
    };
    let sigmas = sweep.sigma.clone().unwrap_or_else(|| vec![sigma_default]);
    let lambdas = sweep
        .lambda
        .clone()
        .unwrap_or_else(|| vec![scenario.law.lambda]);
    let mc_runs = scenario.mc_runs.unwrap_or(10);
    let g = scenario.build_graph()?;

    let cells: Vec<(usize, usize)> = (0..sigmas.len())
        .flat_map(|si| (0..lambdas.len()).map(move |li| (si, li)))
        .collect();

    let results: Vec<SweepCell> = cells
        .par_iter()
        .map(|&(si, li)| {
            let sigma = sigmas[si];
            let lambda = lambdas[li];
            let law = match scenario.build_law(&g, Some(sigma), Some(lambda)) {
                Ok(law) => law,
                Err(e) => {
                    return SweepCell {
                        lambda,
                        sigma,
                        runs_ok: 0,
                        n_events_mean: f64::NAN,
                        t_con_mean: None,
                        energy_mean: None,
                        h2sq_mean: f64::NAN,
                        error: Some(e.to_string()),
                    }
                }
            };
            let mut n_events = Vec::new();
            let mut t_cons = Vec::new();
            let mut energies = Vec::new();
            let mut h2s = Vec::new();
            let mut error = None;
            for run in 0..mc_runs {
                let drifts = sample_drifts(g.n(), substream_seed(scenario.seed, si, li, run));
                let model = ClockModel::new(drifts.clone(), None).expect("positive drifts");
                match crate::clock_sync::run_clock_sync(&g, &law, &model, scenario.horizon) {
                    Ok((trace, _)) => match crate::scenario::summarize(&g, &trace, Some(&drifts)) {
                        Ok(s) => {
                            n_events.push(s.n_events as f64);
                            if let Some(t) = s.t_con {
                                t_cons.push(t);
                            }
                            if let Some(e) = s.energy {
                                energies.push(e);
                            }
                            h2s.push(s.h2sq);
                        }
                        Err(e) => error = Some(e.to_string()),
                    },
                    Err(e) => error = Some(e.to_string()),
                }
            }
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            SweepCell {
                lambda,
                sigma,
                runs_ok: n_events.len(),
                n_events_mean: if n_events.is_empty() {
                    f64::NAN
                } else {
                    mean(&n_events)
                },
                t_con_mean: (t_cons.len() == mc_runs).then(|| mean(&t_cons)),
                energy_mean: (energies.len() == mc_runs).then(|| mean(&energies)),
                h2sq_mean: if h2s.is_empty() { f64::NAN } else { mean(&h2s) },
                error,
            }
        })
        .collect();
    Ok(results)
}

/// Writes `sweep.csv` into `outdir`.
pub fn write_sweep_csv(path: &Path, cells: &[SweepCell]) -> Result<()> {
    let mut out =
        String::from("lambda,sigma,runs_ok,n_events_mean,t_con_mean,energy_mean,h2sq_mean,error\n");
    for c in cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            sig(c.lambda),
            sig(c.sigma),
            c.runs_ok,
            if c.n_events_mean.is_nan() {
                String::new()
            } else {
                sig(c.n_events_mean)
            },
            c.t_con_mean.map(sig).unwrap_or_default(),
            c.energy_mean.map(sig).unwrap_or_default(),
            if c.h2sq_mean.is_nan() {
                String::new()
            } else {
                sig(c.h2sq_mean)
            },
            c.error.as_deref().unwrap_or(""),
        )
        .unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Runs the sweep and writes `sweep.csv` into `outdir`.
pub fn run_to_dir(scenario: &Scenario, outdir: &Path) -> Result<Vec<SweepCell>> {
    if scenario.mode != Mode::Clocksync {
        return Err(Error::Scenario(
            "sweeps draw random clock drifts; use clocksync mode".into(),
        ));
    }
    std::fs::create_dir_all(outdir)?;
    let cells = run_sweep(scenario)?;
    write_sweep_csv(&outdir.join("sweep.csv"), &cells)?;
    Ok(cells)
}
