//! WSN clock synchronization mapped onto the consensus engine.
//!
//! With drift-only local clocks `l_i(t) = gamma_i t` and virtual clocks
//! `T_i(t) = gamma_i alpha_i t = y_i(t) t`, synchronizing the virtual
//! clocks is equivalent to consensus on the modified drifts
//! `y_i = gamma_i alpha_i`. In `y`-coordinates the trigger thresholds are
//! the plain consensus thresholds, the dynamics pick up a per-agent gain
//! `gamma_i`, and the forced-rebroadcast windows live in local time.

use crate::engine::{run_event_driven, Trace};
use crate::graph::Digraph;
use crate::triggers::TriggerLaw;
use crate::{Error, Result};

/// Drift-only clock model: `l_i(t) = gamma_i t`, offsets fixed at zero.
#[derive(Debug, Clone)]
pub struct ClockModel {
    /// Per-agent clock drifts, positive.
    pub gamma: Vec<f64>,
    /// Per-agent initial controlled drifts (default 1).
    pub alpha0: Vec<f64>,
}

impl ClockModel {
    pub fn new(gamma: Vec<f64>, alpha0: Option<Vec<f64>>) -> Result<Self> {
        let n = gamma.len();
        for (i, &g) in gamma.iter().enumerate() {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::Scenario(format!(
                    "gamma[{i}] = {g} must be positive"
                )));
            }
        }
        let alpha0 = alpha0.unwrap_or_else(|| vec![1.0; n]);
        if alpha0.len() != n {
            return Err(Error::Scenario(format!(
                "alpha0 has length {}, expected {n}",
                alpha0.len()
            )));
        }
        Ok(Self { gamma, alpha0 })
    }

    /// The drift vector used by the benchmark scenarios.
    pub fn benchmark_drifts() -> Vec<f64> {
        vec![0.65, 0.79, 0.91, 1.25, 1.4]
    }
}

/// Local and virtual clock readouts at absolute time `t`, using the
/// initial controlled drifts.
pub fn clock_readout(model: &ClockModel, i: usize, t: f64) -> (f64, f64) {
    let local = model.gamma[i] * t;
    let virtual_clock = model.gamma[i] * model.alpha0[i] * t;
    (local, virtual_clock)
}

/// Two-timestamp drift-ratio recipe: `gamma_j / gamma_i` from local clock
/// readings at two reception instants. Exact for linear clocks.
pub fn drift_ratio_estimate(li_m: f64, li_n: f64, lj_m: f64, lj_n: f64) -> Result<f64> {
    let denom = li_m - li_n;
    if denom == 0.0 {
        return Err(Error::Degenerate(
            "identical local timestamps: drift ratio undefined".into(),
        ));
    }
    Ok((lj_m - lj_n) / denom)
}

/// Engine-ready mapping of the clock problem: consensus variable `y`,
/// per-agent rate `gamma`.
#[derive(Debug, Clone)]
pub struct ClockScenario {
    pub y0: Vec<f64>,
    pub rate: Vec<f64>,
}

pub fn build_clock_scenario(
    g: &Digraph,
    _law: &TriggerLaw,
    model: &ClockModel,
) -> Result<ClockScenario> {
    if model.gamma.len() != g.n() {
        return Err(Error::Scenario(format!(
            "gamma has length {}, expected {}",
            model.gamma.len(),
            g.n()
        )));
    }
    let y0: Vec<f64> = model
        .gamma
        .iter()
        .zip(&model.alpha0)
        .map(|(g, a)| g * a)
        .collect();
    Ok(ClockScenario {
        y0,
        rate: model.gamma.clone(),
    })
}

/// Summary of a clock synchronization run.
#[derive(Debug, Clone)]
pub struct ClockReport {
    pub ybar0: f64,
    pub y_spread_initial: f64,
    pub y_spread_final: f64,
    pub y_final: Vec<f64>,
}

fn spread(y: &[f64]) -> f64 {
    let max = y.iter().copied().fold(f64::MIN, f64::max);
    let min = y.iter().copied().fold(f64::MAX, f64::min);
    max - min
}

/// Runs the engine on the modified-drift scenario and reports the final
/// `y`-spread (virtual-clock spread at time `T` is `y`-spread times `T`).
pub fn run_clock_sync(
    g: &Digraph,
    law: &TriggerLaw,
    model: &ClockModel,
    horizon: f64,
) -> Result<(Trace, ClockReport)> {
    let scenario = build_clock_scenario(g, law, model)?;
    let trace = run_event_driven(g, law, &scenario.y0, horizon, &scenario.rate)?;
    let y_final = trace.state_at(horizon);
    let report = ClockReport {
        ybar0: scenario.y0.iter().sum::<f64>() / g.n() as f64,
        y_spread_initial: spread(&scenario.y0),
        y_spread_final: spread(&y_final),
        y_final,
    };
    Ok((trace, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::networks::net1;
    use crate::triggers::validate_and_derive;
    use approx::assert_abs_diff_eq;

    fn benchmark_model() -> ClockModel {
        ClockModel::new(ClockModel::benchmark_drifts(), None).unwrap()
    }

    #[test]
    fn readout_hand_values() {
        let ideal = ClockModel::new(vec![1.0; 5], None).unwrap();
        assert_eq!(clock_readout(&ideal, 0, 5.0), (5.0, 5.0));
        let m = benchmark_model();
        let (l, t) = clock_readout(&m, 0, 10.0);
        assert_abs_diff_eq!(l, 6.5, epsilon = 1e-12);
        assert_abs_diff_eq!(t, 6.5, epsilon = 1e-12);
        assert_eq!(clock_readout(&m, 3, 0.0), (0.0, 0.0));
    }

    #[test]
    fn drift_ratio_exact_for_linear_clocks() {
        let m = benchmark_model();
        let (tm, tn) = (3.7, 9.2);
        for i in 0..5 {
            for j in 0..5 {
                let r = drift_ratio_estimate(
                    m.gamma[i] * tm,
                    m.gamma[i] * tn,
                    m.gamma[j] * tm,
                    m.gamma[j] * tn,
                )
                .unwrap();
                assert_abs_diff_eq!(r, m.gamma[j] / m.gamma[i], epsilon = 1e-12);
            }
        }
        assert_abs_diff_eq!(
            drift_ratio_estimate(0.65, 1.30, 0.79, 1.58).unwrap(),
            0.79 / 0.65,
            epsilon = 1e-12
        );
    }

    #[test]
    fn drift_ratio_rejects_zero_denominator() {
        assert!(drift_ratio_estimate(1.0, 1.0, 2.0, 3.0).is_err());
    }

    #[test]
    fn scenario_maps_benchmark_drifts() {
        let g = net1();
        let p = vec![0.5; 5];
        let law = validate_and_derive(&g, 0.0, &p, &p, &p, None).unwrap();
        let s = build_clock_scenario(&g, &law, &benchmark_model()).unwrap();
        assert_eq!(s.y0, ClockModel::benchmark_drifts());
        assert_abs_diff_eq!(s.y0.iter().sum::<f64>() / 5.0, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn unit_drifts_reduce_to_plain_consensus() {
        let g = net1();
        let p = vec![0.5; 5];
        let law = validate_and_derive(&g, 0.0, &p, &p, &p, None).unwrap();
        let x0 = vec![1.0, -0.3, 0.7, 0.1, 0.5];
        let model = ClockModel::new(vec![1.0; 5], Some(x0.clone())).unwrap();
        let (clock_trace, _) = run_clock_sync(&g, &law, &model, 10.0).unwrap();
        let plain = crate::engine::run_event_driven(&g, &law, &x0, 10.0, &[1.0; 5]).unwrap();
        assert_eq!(clock_trace.events.len(), plain.events.len());
        for (a, b) in clock_trace.events.iter().zip(&plain.events) {
            assert_eq!(a.t.to_bits(), b.t.to_bits());
            assert_eq!(a.agents, b.agents);
        }
    }

    #[test]
    fn virtual_clock_spread_identity() {
        // T_i(t) - T_j(t) = (y_i - y_j) t by construction.
        let g = net1();
        let p = vec![0.5; 5];
        let law = validate_and_derive(&g, 0.0, &p, &p, &p, None).unwrap();
        let (trace, report) = run_clock_sync(&g, &law, &benchmark_model(), 20.0).unwrap();
        let y = trace.state_at(20.0);
        let t_spread = {
            let ts: Vec<f64> = y.iter().map(|yi| yi * 20.0).collect();
            ts.iter().copied().fold(f64::MIN, f64::max)
                - ts.iter().copied().fold(f64::MAX, f64::min)
        };
        assert_abs_diff_eq!(t_spread, report.y_spread_final * 20.0, epsilon = 1e-9);
    }

    #[test]
    fn v2_nonincreasing_along_clock_trace() {
        let g = net1();
        let p = vec![0.5; 5];
        let law = validate_and_derive(&g, 0.0, &p, &p, &p, None).unwrap();
        let (trace, _) = run_clock_sync(&g, &law, &benchmark_model(), 30.0).unwrap();
        let rep = crate::lyapunov::monotonicity_report(&g, &trace, 0.0);
        assert!(rep.pass, "max increase {}", rep.max_increase);
    }
}
