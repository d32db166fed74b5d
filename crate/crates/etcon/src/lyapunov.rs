//! Lyapunov certificates, the derivative bound check, and the exponential
//! rate constant.

use nalgebra::DVector;

use crate::engine::{Segment, Trace};
use crate::graph::Digraph;
use crate::triggers::TriggerLaw;
use crate::{Error, Result};

/// Monotonicity tolerance along trajectories.
pub const MONO_TOL: f64 = 1e-9;

/// `V1 = 1/2 ||x - xbar||^2`.
pub fn v1(x: &[f64], xbar: f64) -> f64 {
    0.5 * x.iter().map(|v| (v - xbar) * (v - xbar)).sum::<f64>()
}

/// `V2 = 1/2 x^T L^T x`.
pub fn v2(g: &Digraph, x: &[f64]) -> f64 {
    let xv = DVector::from_column_slice(x);
    0.5 * (g.laplacian() * &xv).dot(&xv)
}

/// `V_lambda = lambda V1 + (1 - lambda) V2`.
pub fn lyapunov_value(lambda: f64, g: &Digraph, x: &[f64], xbar: f64) -> f64 {
    lambda * v1(x, xbar) + (1.0 - lambda) * v2(g, x)
}

/// Outcome of the runtime derivative bound check.
#[derive(Debug, Clone, Copy)]
pub struct BoundCheck {
    /// Exact derivative `x^T L^T xdot`.
    pub lhs: f64,
    /// `-sum_i [delta_i u_i^2 - (d_i/(2 b_i) + d_i/(2 c_i)) e_i^2]`.
    pub bound: f64,
    pub ok: bool,
}

/// Asserts the `V2` derivative bound numerically at one instant
/// (plain-consensus rates).
pub fn v2dot_bound_check(
    g: &Digraph,
    law: &TriggerLaw,
    x: &[f64],
    xhat: &[f64],
    u: &[f64],
) -> BoundCheck {
    let xv = DVector::from_column_slice(x);
    let uv = DVector::from_column_slice(u);
    let lhs = (g.laplacian() * &xv).dot(&uv);
    let bound: f64 = -(0..g.n())
        .map(|i| {
            let e = xhat[i] - x[i];
            let d = g.out_degree(i);
            law.delta[i] * u[i] * u[i] - (d / (2.0 * law.b[i]) + d / (2.0 * law.c[i])) * e * e
        })
        .sum::<f64>();
    BoundCheck {
        lhs,
        bound,
        ok: lhs <= bound + MONO_TOL,
    }
}

/// The exponential rate constant `A < 0` of the squared-sum law
/// (`lambda = 0`), so that `V2(t) <= V2(0) exp(A t)`.
pub fn exp_rate(g: &Digraph, law: &TriggerLaw) -> Result<f64> {
    if law.lambda != 0.0 {
        return Err(Error::NotApplicable(
            "the exponential rate constant is defined for the lambda = 0 law".into(),
        ));
    }
    let spec = g.spectrum()?;
    let sigma_max = law.sigma.iter().copied().fold(f64::MIN, f64::max);
    let delta_max = law.delta.iter().copied().fold(f64::MIN, f64::max);
    let b_max = law.b.iter().copied().fold(f64::MIN, f64::max);
    let c_max = law.c.iter().copied().fold(f64::MIN, f64::max);
    let b_min = law.b.iter().copied().fold(f64::MAX, f64::min);
    let c_min = law.c.iter().copied().fold(f64::MAX, f64::min);
    let d_min = (0..g.n()).map(|i| g.out_degree(i)).fold(f64::MAX, f64::min);
    let num = (sigma_max - 1.0) * (b_min + c_min) * delta_max * spec.lambda2 * d_min;
    let den = (b_min + c_min) * d_min
        + 2.0 * spec.l_norm * sigma_max * delta_max * b_max * c_max * spec.lambda_n;
    Ok(num / den)
}

/// Coefficients `(c0, c1, c2)` of `V_lambda` along a segment as a quadratic
/// in the offset from `t_start`.
pub fn segment_quadratic(g: &Digraph, lambda: f64, xbar: f64, seg: &Segment) -> (f64, f64, f64) {
    let x = DVector::from_column_slice(&seg.x_start);
    let u = DVector::from_column_slice(&seg.u);
    let d = x.map(|v| v - xbar);
    let lx = g.laplacian() * &x;
    let lu = g.laplacian() * &u;
    let c0 = lambda * 0.5 * d.dot(&d) + (1.0 - lambda) * 0.5 * lx.dot(&x);
    let c1 = lambda * d.dot(&u) + (1.0 - lambda) * 0.5 * (lx.dot(&u) + lu.dot(&x));
    let c2 = lambda * 0.5 * u.dot(&u) + (1.0 - lambda) * 0.5 * lu.dot(&u);
    (c0, c1, c2)
}

/// Result of sampling `V_lambda` densely along a trace.
#[derive(Debug, Clone)]
pub struct MonotonicityReport {
    pub pass: bool,
    /// Largest increase between consecutive samples (0 if none).
    pub max_increase: f64,
    pub samples: usize,
}

/// Evaluates `V_lambda` at segment endpoints plus 10 interior points per
/// segment and reports whether it is non-increasing within [`MONO_TOL`].
pub fn monotonicity_report(g: &Digraph, trace: &Trace, lambda: f64) -> MonotonicityReport {
    const INTERIOR: usize = 10;
    let xbar = trace.consensus_point();
    let mut max_increase: f64 = 0.0;
    let mut samples = 0usize;
    let mut prev: Option<f64> = None;
    for seg in &trace.segments {
        let (c0, c1, c2) = segment_quadratic(g, lambda, xbar, seg);
        let len = seg.t_end - seg.t_start;
        for k in 0..=(INTERIOR + 1) {
            let dt = len * k as f64 / (INTERIOR + 1) as f64;
            let v = c0 + c1 * dt + c2 * dt * dt;
            if let Some(p) = prev {
                max_increase = max_increase.max(v - p);
            }
            prev = Some(v);
            samples += 1;
        }
    }
    MonotonicityReport {
        pass: max_increase <= MONO_TOL,
        max_increase,
        samples,
    }
}
