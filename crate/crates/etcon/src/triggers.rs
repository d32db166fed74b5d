//! The three triggering laws and their guaranteed dwell times.
//!
//! A single `lambda`-parameterized law covers all three: `lambda = 1` is the
//! squared-difference trigger (`alg1`), `lambda = 0` the squared-sum
//! trigger (`alg2`), and intermediate values blend the two thresholds.

use crate::graph::Digraph;
use crate::{Error, Result};

/// Tolerance for the `f_i = 0` event-equality branch. Events are localized
/// analytically, so equality holds to rounding only.
pub const EVENT_TOL: f64 = 1e-12;

/// `a_i` of the lambda = 1 trigger derivation, fixed at its optimal value.
pub const ALG1_A: f64 = 0.5;

/// A validated trigger law: `lambda` plus per-agent parameters.
#[derive(Debug, Clone)]
pub struct TriggerLaw {
    /// Blend parameter in `[0, 1]`; 1 recovers `alg1`, 0 `alg2`.
    pub lambda: f64,
    /// Per-agent flexibility parameter, strictly in (0, 1).
    pub sigma: Vec<f64>,
    /// Per-agent Young's-inequality split parameter, > 0.
    pub b: Vec<f64>,
    /// Per-agent Young's-inequality split parameter, > 0.
    pub c: Vec<f64>,
    /// Derived margin `delta_i = 1 - d_i b_i / 2 - sum_j w_ij c_j / 2`.
    pub delta: Vec<f64>,
    /// Forced-rebroadcast window, strictly below the dwell bound.
    pub eps: Vec<f64>,
}

/// The `b_i = c_i` value guaranteed to give `delta_i >= 0.5` on any graph.
pub fn safe_default_bc(g: &Digraph) -> f64 {
    let max_d = (0..g.n()).map(|i| g.out_degree(i)).fold(0.0, f64::max);
    0.5 / max_d
}

/// `delta_i` per agent for given `b`, `c`.
pub fn derive_delta(g: &Digraph, b: &[f64], c: &[f64]) -> Vec<f64> {
    (0..g.n())
        .map(|i| {
            let cross: f64 = g.out_neighbors(i).map(|j| g.weight(i, j) * c[j]).sum();
            1.0 - g.out_degree(i) * b[i] / 2.0 - cross / 2.0
        })
        .collect()
}

/// Validates parameters and derives `delta` and the default `eps`.
///
/// Rejects any configuration with `delta_i <= 0` while the squared-sum
/// component is active (`lambda < 1`); a negative `delta` makes that
/// threshold negative and the dwell time imaginary.
pub fn validate_and_derive(
    g: &Digraph,
    lambda: f64,
    sigma: &[f64],
    b: &[f64],
    c: &[f64],
    eps_override: Option<&[f64]>,
) -> Result<TriggerLaw> {
    let n = g.n();
    if !g.is_weight_balanced(1e-9) || !g.is_strongly_connected() {
        return Err(Error::InvalidLaw(
            "graph must be weight-balanced and strongly connected".into(),
        ));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidLaw(format!(
            "lambda = {lambda} outside [0, 1]"
        )));
    }
    for (name, arr) in [("sigma", sigma), ("b", b), ("c", c)] {
        if arr.len() != n {
            return Err(Error::InvalidLaw(format!(
                "{name} has length {}, expected {n}",
                arr.len()
            )));
        }
    }
    for (i, &s) in sigma.iter().enumerate() {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidLaw(format!(
                "sigma[{i}] = {s} must lie strictly in (0, 1)"
            )));
        }
    }
    for i in 0..n {
        if b[i] <= 0.0 || c[i] <= 0.0 {
            return Err(Error::InvalidLaw(format!(
                "b[{i}] = {} and c[{i}] = {} must be positive",
                b[i], c[i]
            )));
        }
    }

    let delta = derive_delta(g, b, c);
    if lambda < 1.0 {
        for (i, &d) in delta.iter().enumerate() {
            if d <= 0.0 {
                return Err(Error::InvalidLaw(format!(
                    "delta[{i}] = {d:.6} <= 0; the squared-sum trigger threshold would be \
                     negative. Try the safe default b_i = c_i = {:.6} (0.5 / max_j d_j^out), \
                     which guarantees delta_i >= 0.5",
                    safe_default_bc(g)
                )));
            }
        }
    }

    let bounds: Vec<f64> = (0..n)
        .map(|i| dwell_radicand(g, i, lambda, sigma[i], delta[i], b[i], c[i]).sqrt())
        .collect();
    let eps = match eps_override {
        Some(e) => {
            if e.len() != n {
                return Err(Error::InvalidLaw(format!(
                    "eps has length {}, expected {n}",
                    e.len()
                )));
            }
            for (i, &v) in e.iter().enumerate() {
                if !(v > 0.0 && v < bounds[i]) {
                    return Err(Error::InvalidLaw(format!(
                        "eps[{i}] = {v} must lie strictly in (0, {})",
                        bounds[i]
                    )));
                }
            }
            e.to_vec()
        }
        None => bounds.iter().map(|&bd| 0.99 * bd).collect(),
    };

    Ok(TriggerLaw {
        lambda,
        sigma: sigma.to_vec(),
        b: b.to_vec(),
        c: c.to_vec(),
        delta,
        eps,
    })
}

/// Squared-difference (`alg1`) bracket: `1/(4 d_i) sum_j w_ij (xhat_i - xhat_j)^2`.
pub fn alg1_phi(g: &Digraph, i: usize, xhat: &[f64]) -> f64 {
    let d = g.out_degree(i);
    if d <= 0.0 {
        return 0.0;
    }
    let sum: f64 = g
        .out_neighbors(i)
        .map(|j| {
            let diff = xhat[i] - xhat[j];
            g.weight(i, j) * diff * diff
        })
        .sum();
    sum / (4.0 * d)
}

/// Squared-sum (`alg2`) bracket:
/// `2 delta_i b_i c_i / ((b_i + c_i) d_i) (sum_j w_ij (xhat_i - xhat_j))^2`.
pub fn alg2_phi(g: &Digraph, i: usize, delta_i: f64, b_i: f64, c_i: f64, xhat: &[f64]) -> f64 {
    let d = g.out_degree(i);
    if d <= 0.0 {
        return 0.0;
    }
    let s: f64 = g
        .out_neighbors(i)
        .map(|j| g.weight(i, j) * (xhat[i] - xhat[j]))
        .sum();
    2.0 * delta_i * b_i * c_i / ((b_i + c_i) * d) * (s * s)
}

/// The combined bracket `phi_i` (threshold without the `sigma_i` factor).
pub fn phi(law: &TriggerLaw, g: &Digraph, i: usize, xhat: &[f64]) -> f64 {
    if law.lambda == 1.0 {
        alg1_phi(g, i, xhat)
    } else if law.lambda == 0.0 {
        alg2_phi(g, i, law.delta[i], law.b[i], law.c[i], xhat)
    } else {
        law.lambda * alg1_phi(g, i, xhat)
            + (1.0 - law.lambda) * alg2_phi(g, i, law.delta[i], law.b[i], law.c[i], xhat)
    }
}

/// The trigger threshold `theta_i = sigma_i * phi_i`; the trigger function
/// value is `f_i = e_i^2 - theta_i`.
pub fn trigger_threshold(law: &TriggerLaw, g: &Digraph, i: usize, xhat: &[f64]) -> f64 {
    law.sigma[i] * phi(law, g, i, xhat)
}

/// Event condition: `e_i^2 > theta_i`, or `e_i^2 = theta_i` (within
/// [`EVENT_TOL`]) with `phi_i != 0`.
pub fn trigger_fired(law: &TriggerLaw, g: &Digraph, i: usize, x_i: f64, xhat: &[f64]) -> bool {
    let e = xhat[i] - x_i;
    let e2 = e * e;
    let p = phi(law, g, i, xhat);
    let theta = law.sigma[i] * p;
    if e2 - theta > EVENT_TOL {
        true
    } else {
        (e2 - theta).abs() <= EVENT_TOL && p != 0.0
    }
}

fn dwell_radicand(
    g: &Digraph,
    i: usize,
    lambda: f64,
    sigma_i: f64,
    delta_i: f64,
    b_i: f64,
    c_i: f64,
) -> f64 {
    let d = g.out_degree(i);
    if d <= 0.0 {
        return f64::INFINITY;
    }
    let alg1 = {
        let wmax = g.max_out_weight(i);
        let k = g.out_neighbor_count(i) as f64;
        sigma_i / (4.0 * d * wmax * k)
    };
    let alg2 = 2.0 * sigma_i * delta_i * b_i * c_i / ((b_i + c_i) * d);
    if lambda == 1.0 {
        alg1
    } else if lambda == 0.0 {
        alg2
    } else {
        lambda * alg1 + (1.0 - lambda) * alg2
    }
}

/// Guaranteed self-trigger dwell time `tau_i` and the strict upper bound on
/// the forced-rebroadcast window `eps_i` (the two coincide).
pub fn dwell_bounds(law: &TriggerLaw, g: &Digraph, i: usize) -> (f64, f64) {
    let tau = dwell_radicand(
        g,
        i,
        law.lambda,
        law.sigma[i],
        law.delta[i],
        law.b[i],
        law.c[i],
    )
    .sqrt();
    (tau, tau)
}
