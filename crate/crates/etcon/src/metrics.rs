//! The performance-metric suite: event counts, 99% convergence time,
//! communication energy, and the H2-norm-squared deviation integral.

use crate::engine::{Cause, Trace};
use crate::graph::Digraph;
use crate::lyapunov::segment_quadratic;
use crate::{Error, Result};

/// Broadcast counts extracted from a trace.
#[derive(Debug, Clone)]
pub struct EventCounts {
    /// All broadcasts, initial ones included.
    pub total: usize,
    pub per_agent: Vec<usize>,
    /// Broadcasts of the `t = 0` initialization event.
    pub initial: usize,
}

pub fn count_events(trace: &Trace) -> EventCounts {
    let mut per_agent = vec![0usize; trace.n()];
    let mut initial = 0usize;
    for ev in &trace.events {
        for &(i, cause) in &ev.agents {
            per_agent[i] += 1;
            if cause == Cause::Initial {
                initial += 1;
            }
        }
    }
    EventCounts {
        total: per_agent.iter().sum(),
        per_agent,
        initial,
    }
}

/// Earliest `t` with `V_lambda(x(t)) <= fraction * V_lambda(x(0))`, found
/// by solving the per-segment quadratic exactly. `None` if never reached
/// within the horizon.
pub fn convergence_time(g: &Digraph, trace: &Trace, lambda: f64, fraction: f64) -> Option<f64> {
    let xbar = trace.consensus_point();
    let v0 = crate::lyapunov::lyapunov_value(lambda, g, &trace.x0, xbar);
    if v0 == 0.0 {
        return Some(0.0);
    }
    let target = fraction * v0;
    for seg in &trace.segments {
        let (c0, c1, c2) = segment_quadratic(g, lambda, xbar, seg);
        let len = seg.t_end - seg.t_start;
        let value = |dt: f64| c0 + c1 * dt + c2 * dt * dt;
        if value(0.0) <= target {
            return Some(seg.t_start);
        }
        if value(len) > target {
            continue;
        }
        // First crossing of value(dt) = target inside [0, len].
        let root = smallest_root_in(c2, c1, c0 - target, len)
            .unwrap_or_else(|| bisect(&value, target, len));
        return Some(seg.t_start + root);
    }
    None
}

fn smallest_root_in(a: f64, b: f64, c: f64, len: f64) -> Option<f64> {
    let roots: Vec<f64> = if a.abs() < 1e-300 {
        if b == 0.0 {
            return None;
        }
        vec![-c / b]
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return None;
        }
        let s = disc.sqrt();
        vec![(-b - s) / (2.0 * a), (-b + s) / (2.0 * a)]
    };
    roots
        .into_iter()
        .filter(|r| (-1e-12..=len * (1.0 + 1e-12)).contains(r))
        .map(|r| r.clamp(0.0, len))
        .min_by(|x, y| x.total_cmp(y))
}

fn bisect(value: &dyn Fn(f64) -> f64, target: f64, len: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, len);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if value(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Instantaneous power of the pairwise model with unit medium constants:
/// `P = sum_i sum_{j != i} 10^(0.1 + |a_i - a_j|)` in mW.
pub fn power(alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut p = 0.0;
    for i in 0..n {
        for j in 0..n {
            if j != i {
                p += 10f64.powf(0.1 + (alpha[i] - alpha[j]).abs());
            }
        }
    }
    p
}

/// Communication energy `E = integral of P over [0, t_con]` in mW s.
///
/// For clock-sync traces pass `gamma` so the power model sees the
/// controlled drifts `alpha_i = y_i / gamma_i`; for plain consensus the
/// tracked states are used directly. Adaptive quadrature per segment,
/// relative tolerance 1e-8.
pub fn energy(trace: &Trace, t_con: f64, gamma: Option<&[f64]>) -> Result<f64> {
    if t_con.is_nan() || t_con < 0.0 {
        return Err(Error::Degenerate(format!("t_con = {t_con}")));
    }
    let mut total = 0.0;
    for seg in &trace.segments {
        if seg.t_start >= t_con {
            break;
        }
        let end = seg.t_end.min(t_con);
        let f = |t: f64| {
            let dt = t - seg.t_start;
            let alpha: Vec<f64> = seg
                .x_start
                .iter()
                .zip(&seg.u)
                .enumerate()
                .map(|(i, (x, u))| {
                    let y = x + u * dt;
                    match gamma {
                        Some(gs) => y / gs[i],
                        None => y,
                    }
                })
                .collect();
            power(&alpha)
        };
        total += adaptive_simpson(&f, seg.t_start, end, 1e-8);
    }
    Ok(total)
}

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    adaptive_step(f, a, b, fa, fm, fb, whole, whole.abs() * rel_tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive_step(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1)
            + adaptive_step(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1)
    }
}

/// H2-norm-squared result: the deviation integral truncated at the trace
/// horizon, plus the integrand value at the horizon as a truncation gauge.
#[derive(Debug, Clone, Copy)]
pub struct H2 {
    pub value: f64,
    pub tail_integrand: f64,
}

/// `C = integral over [0, horizon] of sum_i (y_i(t) - ybar)^2 dt`, with
/// `ybar` the mean of the tracked variable at `t = 0`. Exact per-segment
/// closed form (the integrand is quadratic on each segment).
pub fn h2_norm_sq(trace: &Trace) -> H2 {
    let ybar = trace.x0.iter().sum::<f64>() / trace.n() as f64;
    let mut value = 0.0;
    for seg in &trace.segments {
        let len = seg.t_end - seg.t_start;
        let mut a = 0.0; // sum d_i^2
        let mut b = 0.0; // 2 sum d_i u_i
        let mut c = 0.0; // sum u_i^2
        for (x, u) in seg.x_start.iter().zip(&seg.u) {
            let d = x - ybar;
            a += d * d;
            b += 2.0 * d * u;
            c += u * u;
        }
        value += a * len + b * len * len / 2.0 + c * len * len * len / 3.0;
    }
    let yh = trace.state_at(trace.horizon);
    let tail_integrand = yh.iter().map(|y| (y - ybar) * (y - ybar)).sum();
    H2 {
        value,
        tail_integrand,
    }
}
