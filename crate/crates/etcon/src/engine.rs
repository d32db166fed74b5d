//! Exact event-driven simulation of the hybrid system.
//!
//! Between broadcasts the true states are linear in time (controls are
//! frozen), so the next trigger instant of each agent is the root of a
//! scalar quadratic and is computed in closed form. Broadcasts at one
//! timestamp are resolved as a cascade: threshold initiators plus every
//! agent forced to rebroadcast by the open window `(t_last, t_last + eps)`.

use crate::graph::Digraph;
use crate::triggers::{self, TriggerLaw};
use crate::{Error, Result};

/// Tie tolerance for simultaneous trigger roots.
pub const TIE_TOL: f64 = 1e-12;

/// Controls with magnitude below this are treated as non-triggering.
pub const SLOPE_TOL: f64 = 1e-14;

/// Default event safety cap; exceeding it aborts the run.
pub const EVENT_CAP: usize = 1_000_000;

/// Full simulation state at an instant.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    /// True states.
    pub x: Vec<f64>,
    /// Last broadcast states (frozen between events).
    pub xhat: Vec<f64>,
    /// Controls, `u_i = -rate_i sum_j w_ij (xhat_i - xhat_j)`.
    pub u: Vec<f64>,
    /// Per-agent time of most recent broadcast.
    pub last_broadcast: Vec<f64>,
    /// Per-agent control multiplier (1 for plain consensus, gamma_i for
    /// clock synchronization).
    pub rate: Vec<f64>,
}

/// Why an agent broadcast at an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cause {
    Initial,
    Threshold,
    Forced,
}

/// All agents that broadcast at one timestamp.
#[derive(Debug, Clone)]
pub struct EventRecord {
    pub t: f64,
    pub agents: Vec<(usize, Cause)>,
}

/// One piecewise-linear span between consecutive events:
/// `x(t) = x_start + u (t - t_start)` with `xhat` and `u` frozen.
#[derive(Debug, Clone)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub x_start: Vec<f64>,
    pub xhat: Vec<f64>,
    pub u: Vec<f64>,
}

/// A complete run: ordered events plus the exact trajectory.
#[derive(Debug, Clone)]
pub struct Trace {
    pub lambda: f64,
    pub x0: Vec<f64>,
    pub rate: Vec<f64>,
    pub horizon: f64,
    pub segments: Vec<Segment>,
    pub events: Vec<EventRecord>,
}

impl Trace {
    pub fn n(&self) -> usize {
        self.x0.len()
    }

    /// The consensus value of the run. Rates preserve `sum_i x_i / rate_i`,
    /// so the trajectory converges to the `1/rate`-weighted mean of `x0`
    /// (the plain average when every rate is 1).
    pub fn consensus_point(&self) -> f64 {
        let num: f64 = self.x0.iter().zip(&self.rate).map(|(x, r)| x / r).sum();
        let den: f64 = self.rate.iter().map(|r| 1.0 / r).sum();
        num / den
    }

    /// Exact state at time `t` (clamped to `[0, horizon]`).
    pub fn state_at(&self, t: f64) -> Vec<f64> {
        let t = t.clamp(0.0, self.horizon);
        if self.segments.is_empty() {
            return self.x0.clone();
        }
        let idx = match self.segments.binary_search_by(|s| s.t_start.total_cmp(&t)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let seg = &self.segments[idx];
        let dt = (t - seg.t_start).min(seg.t_end - seg.t_start);
        seg.x_start
            .iter()
            .zip(&seg.u)
            .map(|(x, u)| x + u * dt)
            .collect()
    }
}

/// `u_i = -rate_i sum_j w_ij (xhat_i - xhat_j)`; self-loops contribute 0.
pub fn control_input(g: &Digraph, xhat: &[f64], rate: &[f64]) -> Vec<f64> {
    (0..g.n())
        .map(|i| {
            let s: f64 = g
                .out_neighbors(i)
                .map(|j| g.weight(i, j) * (xhat[i] - xhat[j]))
                .sum();
            -rate[i] * s
        })
        .collect()
}

/// Earliest future trigger instant, with every agent whose root ties for
/// the minimum (within [`TIE_TOL`]). `None` if no agent ever triggers.
///
/// The error `e_i(t) = e_i(t0) - u_i (t - t0)` is linear, so `f_i` reaches
/// zero at `dt = (sqrt(theta_i) - e_i(t0) sign(-u_i)) / |u_i|`.
pub fn next_event_time(
    state: &SimState,
    law: &TriggerLaw,
    g: &Digraph,
) -> Option<(f64, Vec<usize>)> {
    let mut best = f64::INFINITY;
    let mut per_agent = vec![f64::INFINITY; g.n()];
    for (i, slot) in per_agent.iter_mut().enumerate() {
        let slope = -state.u[i];
        if slope.abs() < SLOPE_TOL {
            continue;
        }
        // slope != 0 implies phi_i > 0, hence theta_i > 0.
        let theta = triggers::trigger_threshold(law, g, i, &state.xhat);
        let e0 = state.xhat[i] - state.x[i];
        let dt = ((theta.sqrt() - e0 * slope.signum()) / slope.abs()).max(0.0);
        *slot = state.t + dt;
        if *slot < best {
            best = *slot;
        }
    }
    if !best.is_finite() {
        return None;
    }
    let initiators: Vec<usize> = (0..g.n())
        .filter(|&i| per_agent[i] <= best + TIE_TOL)
        .collect();
    Some((best, initiators))
}

/// Resolves all broadcasts at one timestamp and updates the state in place.
///
/// Starting from the initiators, any agent that receives new information
/// from an out-neighbor in the broadcast set while inside its open forced
/// window `(t_last, t_last + eps_abs)` joins the set and rebroadcasts;
/// the set grows monotonically and stabilizes in at most `n` passes.
pub fn apply_broadcast_cascade(
    state: &mut SimState,
    initiators: &[usize],
    g: &Digraph,
    eps_abs: &[f64],
    initiator_cause: Cause,
) -> EventRecord {
    let n = g.n();
    let t = state.t;
    let mut cause: Vec<Option<Cause>> = vec![None; n];
    for &i in initiators {
        cause[i] = Some(initiator_cause);
    }
    loop {
        let mut grew = false;
        for k in 0..n {
            if cause[k].is_some() {
                continue;
            }
            let receives = g.out_neighbors(k).any(|j| j != k && cause[j].is_some());
            let in_window = t > state.last_broadcast[k] && t < state.last_broadcast[k] + eps_abs[k];
            if receives && in_window {
                cause[k] = Some(Cause::Forced);
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    let agents: Vec<(usize, Cause)> = (0..n).filter_map(|i| cause[i].map(|c| (i, c))).collect();
    for &(i, _) in &agents {
        state.xhat[i] = state.x[i];
        state.last_broadcast[i] = t;
    }
    state.u = control_input(g, &state.xhat, &state.rate);
    EventRecord { t, agents }
}

fn init_state(g: &Digraph, x0: &[f64], rate: &[f64]) -> SimState {
    let xhat = x0.to_vec();
    let u = control_input(g, &xhat, rate);
    SimState {
        t: 0.0,
        x: x0.to_vec(),
        xhat,
        u,
        last_broadcast: vec![0.0; g.n()],
        rate: rate.to_vec(),
    }
}

fn eps_abs(law: &TriggerLaw, rate: &[f64]) -> Vec<f64> {
    // Forced windows are specified in each agent's local time scale.
    law.eps.iter().zip(rate).map(|(e, r)| e / r).collect()
}

/// Runs the exact event-driven simulation from `t = 0` (all agents
/// broadcast initially) to `horizon`.
pub fn run_event_driven(
    g: &Digraph,
    law: &TriggerLaw,
    x0: &[f64],
    horizon: f64,
    rate: &[f64],
) -> Result<Trace> {
    run_event_driven_capped(g, law, x0, horizon, rate, EVENT_CAP)
}

/// [`run_event_driven`] with an explicit event safety cap.
pub fn run_event_driven_capped(
    g: &Digraph,
    law: &TriggerLaw,
    x0: &[f64],
    horizon: f64,
    rate: &[f64],
    cap: usize,
) -> Result<Trace> {
    assert_eq!(x0.len(), g.n());
    assert_eq!(rate.len(), g.n());
    assert!(horizon > 0.0, "horizon must be positive");
    let eps = eps_abs(law, rate);
    let mut state = init_state(g, x0, rate);
    let mut segments = Vec::new();
    let mut events = vec![EventRecord {
        t: 0.0,
        agents: (0..g.n()).map(|i| (i, Cause::Initial)).collect(),
    }];
    let mut total = g.n();

    loop {
        let next = next_event_time(&state, law, g);
        let t_star = match next {
            Some((t, _)) if t <= horizon => t,
            _ => {
                if horizon > state.t {
                    segments.push(Segment {
                        t_start: state.t,
                        t_end: horizon,
                        x_start: state.x.clone(),
                        xhat: state.xhat.clone(),
                        u: state.u.clone(),
                    });
                }
                break;
            }
        };
        let initiators = next.unwrap().1;
        if t_star > state.t {
            segments.push(Segment {
                t_start: state.t,
                t_end: t_star,
                x_start: state.x.clone(),
                xhat: state.xhat.clone(),
                u: state.u.clone(),
            });
            let dt = t_star - state.t;
            for (x, u) in state.x.iter_mut().zip(&state.u) {
                *x += u * dt;
            }
            state.t = t_star;
        }
        let record = apply_broadcast_cascade(&mut state, &initiators, g, &eps, Cause::Threshold);
        total += record.agents.len();
        events.push(record);
        if total > cap {
            return Err(Error::SafetyCap { cap, t: state.t });
        }
    }

    Ok(Trace {
        lambda: law.lambda,
        x0: x0.to_vec(),
        rate: rate.to_vec(),
        horizon,
        segments,
        events,
    })
}

/// Independent fixed-step verification oracle.
///
/// States are exactly linear between broadcasts, so stepping `x` by
/// `u * dt` is exact; triggers are checked once per step via
/// [`triggers::trigger_fired`], giving event times accurate to `dt`.
pub fn run_fixed_step_oracle(
    g: &Digraph,
    law: &TriggerLaw,
    x0: &[f64],
    horizon: f64,
    dt: f64,
    rate: &[f64],
) -> Result<Trace> {
    assert!(dt > 0.0);
    let eps = eps_abs(law, rate);
    let mut state = init_state(g, x0, rate);
    let mut segments = Vec::new();
    let mut events = vec![EventRecord {
        t: 0.0,
        agents: (0..g.n()).map(|i| (i, Cause::Initial)).collect(),
    }];
    let mut total = g.n();
    let mut seg_start = 0.0;
    let mut seg_x = state.x.clone();
    let steps = (horizon / dt).ceil() as usize;
    for k in 1..=steps {
        let t = (k as f64 * dt).min(horizon);
        let step = t - state.t;
        for (x, u) in state.x.iter_mut().zip(&state.u) {
            *x += u * step;
        }
        state.t = t;
        loop {
            let fired: Vec<usize> = (0..g.n())
                .filter(|&i| triggers::trigger_fired(law, g, i, state.x[i], &state.xhat))
                .collect();
            if fired.is_empty() {
                break;
            }
            segments.push(Segment {
                t_start: seg_start,
                t_end: t,
                x_start: seg_x.clone(),
                xhat: state.xhat.clone(),
                u: state.u.clone(),
            });
            let record = apply_broadcast_cascade(&mut state, &fired, g, &eps, Cause::Threshold);
            total += record.agents.len();
            events.push(record);
            seg_start = t;
            seg_x = state.x.clone();
            if total > EVENT_CAP {
                return Err(Error::SafetyCap { cap: EVENT_CAP, t });
            }
        }
    }
    if horizon > seg_start {
        segments.push(Segment {
            t_start: seg_start,
            t_end: horizon,
            x_start: seg_x,
            xhat: state.xhat.clone(),
            u: state.u.clone(),
        });
    }
    Ok(Trace {
        lambda: law.lambda,
        x0: x0.to_vec(),
        rate: rate.to_vec(),
        horizon,
        segments,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::networks::net3;
    use crate::triggers::validate_and_derive;
    use approx::assert_abs_diff_eq;

    fn law3(lambda: f64) -> (Digraph, TriggerLaw) {
        let g = net3();
        let p = vec![0.5; 5];
        let law = validate_and_derive(&g, lambda, &p, &p, &p, None).unwrap();
        (g, law)
    }

    #[test]
    fn control_hand_values() {
        let (g, _) = law3(0.0);
        let rate = vec![1.0; 5];
        let u = control_input(&g, &[1.0, 0.0, 0.0, 0.0, 0.0], &rate);
        assert_abs_diff_eq!(u[0], -1.0, epsilon = 1e-12);
        for v in &u[1..] {
            assert_abs_diff_eq!(*v, 0.25, epsilon = 1e-12);
        }
        assert!(control_input(&g, &[3.0; 5], &rate)
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn control_sums_to_zero_when_balanced() {
        let (g, _) = law3(0.0);
        let u = control_input(&g, &[0.3, -1.2, 0.7, 2.0, 0.05], &[1.0; 5]);
        assert!(u.iter().sum::<f64>().abs() <= 1e-12);
    }

    #[test]
    fn next_event_absent_at_consensus() {
        let (g, law) = law3(0.0);
        let state = init_state(&g, &[2.0; 5], &[1.0; 5]);
        assert!(next_event_time(&state, &law, &g).is_none());
    }

    #[test]
    fn next_event_matches_dwell_root() {
        // e = 0, theta_0 = 0.125, |u_0| = 1: t* = sqrt(0.125).
        let (g, law) = law3(0.0);
        let state = init_state(&g, &[1.0, 0.0, 0.0, 0.0, 0.0], &[1.0; 5]);
        let (t, initiators) = next_event_time(&state, &law, &g).unwrap();
        assert_abs_diff_eq!(t, 0.125f64.sqrt(), epsilon = 1e-12);
        // The dwell root is parameter-only for the squared-sum law, so all
        // five agents tie.
        assert_eq!(initiators.len(), 5);
    }

    #[test]
    fn cascade_isolated_event() {
        let (g, law) = law3(0.0);
        let mut state = init_state(&g, &[1.0, 0.0, 0.0, 0.0, 0.0], &[1.0; 5]);
        // Place the event outside everyone's window.
        state.t = 10.0;
        let eps = vec![0.1; 5];
        let _ = law;
        let rec = apply_broadcast_cascade(&mut state, &[0], &g, &eps, Cause::Threshold);
        assert_eq!(rec.agents.len(), 1);
        assert_eq!(rec.agents[0], (0, Cause::Threshold));
        assert_eq!(state.xhat[0], state.x[0]);
        assert_eq!(state.last_broadcast[0], 10.0);
    }

    #[test]
    fn cascade_chain_within_windows() {
        // a -> b -> c chain on a 3-cycle: everyone inside the window joins.
        let g = Digraph::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap();
        let mut state = init_state(&g, &[0.0, 0.0, 0.0], &[1.0; 3]);
        state.t = 0.05;
        state.last_broadcast = vec![0.0; 3];
        let eps = vec![0.1; 3];
        // Agent 1 initiates; agent 0 listens to 1 (forced), agent 2 listens
        // to 0 (forced once 0 joins).
        let rec = apply_broadcast_cascade(&mut state, &[1], &g, &eps, Cause::Threshold);
        assert_eq!(rec.agents.len(), 3);
        assert_eq!(rec.agents[1], (1, Cause::Threshold));
        assert_eq!(rec.agents[0].1, Cause::Forced);
        assert_eq!(rec.agents[2].1, Cause::Forced);
    }

    #[test]
    fn cascade_window_is_open() {
        // Receiving exactly at t_last + eps does not force a rebroadcast.
        let g = Digraph::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let mut state = init_state(&g, &[0.0, 1.0], &[1.0; 2]);
        state.t = 0.1;
        let eps = vec![0.1; 2];
        let rec = apply_broadcast_cascade(&mut state, &[1], &g, &eps, Cause::Threshold);
        assert_eq!(rec.agents.len(), 1);
    }

    #[test]
    fn consensus_start_trace_is_constant() {
        let (g, law) = law3(0.0);
        let trace = run_event_driven(&g, &law, &[4.2; 5], 5.0, &[1.0; 5]).unwrap();
        assert_eq!(trace.events.len(), 1);
        assert_eq!(trace.segments.len(), 1);
        assert_eq!(trace.state_at(5.0), vec![4.2; 5]);
    }

    #[test]
    fn first_event_time_on_complete_network() {
        let (g, law) = law3(0.0);
        let trace = run_event_driven(&g, &law, &[1.0, 0.0, 0.0, 0.0, 0.0], 2.0, &[1.0; 5]).unwrap();
        assert_abs_diff_eq!(trace.events[1].t, 0.125f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn mean_is_conserved() {
        let (g, law) = law3(0.5);
        let x0 = [1.0, -0.3, 0.7, 0.1, 0.5];
        let trace = run_event_driven(&g, &law, &x0, 20.0, &[1.0; 5]).unwrap();
        let m0 = x0.iter().sum::<f64>() / 5.0;
        for t in [0.0, 0.1, 1.0, 5.0, 19.9, 20.0] {
            let x = trace.state_at(t);
            let m = x.iter().sum::<f64>() / 5.0;
            assert!((m - m0).abs() <= 1e-9, "t = {t}: {m} vs {m0}");
        }
    }

    #[test]
    fn determinism() {
        let (g, law) = law3(0.5);
        let x0 = [1.0, -0.3, 0.7, 0.1, 0.5];
        let a = run_event_driven(&g, &law, &x0, 10.0, &[1.0; 5]).unwrap();
        let b = run_event_driven(&g, &law, &x0, 10.0, &[1.0; 5]).unwrap();
        assert_eq!(a.events.len(), b.events.len());
        for (ea, eb) in a.events.iter().zip(&b.events) {
            assert_eq!(ea.t.to_bits(), eb.t.to_bits());
            assert_eq!(ea.agents, eb.agents);
        }
    }

    #[test]
    fn segments_abut_exactly() {
        let (g, law) = law3(0.0);
        let trace =
            run_event_driven(&g, &law, &[1.0, 0.0, 0.0, 0.0, 0.0], 10.0, &[1.0; 5]).unwrap();
        for pair in trace.segments.windows(2) {
            assert_eq!(pair[0].t_end.to_bits(), pair[1].t_start.to_bits());
        }
        assert_eq!(trace.segments.last().unwrap().t_end, 10.0);
    }

    #[test]
    fn safety_cap_reports() {
        let (g, law) = law3(0.0);
        let err =
            run_event_driven_capped(&g, &law, &[1.0, 0.0, 0.0, 0.0, 0.0], 50.0, &[1.0; 5], 10)
                .unwrap_err();
        assert!(matches!(err, Error::SafetyCap { cap: 10, .. }));
    }

    #[test]
    fn oracle_agrees_on_consensus_start() {
        let (g, law) = law3(0.0);
        let trace = run_fixed_step_oracle(&g, &law, &[1.5; 5], 1.0, 1e-3, &[1.0; 5]).unwrap();
        assert_eq!(trace.events.len(), 1);
    }

    #[test]
    fn oracle_first_event_near_exact_root() {
        let (g, law) = law3(0.0);
        let trace =
            run_fixed_step_oracle(&g, &law, &[1.0, 0.0, 0.0, 0.0, 0.0], 1.0, 1e-5, &[1.0; 5])
                .unwrap();
        assert!((trace.events[1].t - 0.125f64.sqrt()).abs() <= 1e-4);
    }
}
